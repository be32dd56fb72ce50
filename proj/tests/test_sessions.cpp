#include <doctest.h>

#include <sstream>

#include "lyricscope/error.hpp"
#include "lyricscope/random.hpp"
#include "lyricscope/sessions.hpp"
#include "oracles.hpp"

using namespace lyricscope;
using namespace std::chrono_literals;

namespace {

std::vector<ScrobbleEvent> at_minutes(std::initializer_list<long long> minutes, const char* user = "u") {
  std::vector<ScrobbleEvent> out;
  for (auto m : minutes) out.push_back({user, "t", Timestamp{std::chrono::minutes{m}}});
  return out;
}

std::vector<std::size_t> sizes(const std::vector<Session>& sessions) {
  std::vector<std::size_t> out;
  for (const auto& s : sessions) out.push_back(s.events.size());
  return out;
}

}  // namespace

TEST_CASE("segment examples") {
  CHECK(sizes(segment(at_minutes({0, 30, 90}))) == std::vector<std::size_t>{3});
  CHECK(sizes(segment(at_minutes({0, 30, 90, 300}))) == std::vector<std::size_t>{3, 1});
  CHECK(sizes(segment(at_minutes({0, 120}))) == std::vector<std::size_t>{1, 1});
  CHECK(sizes(segment(at_minutes({0, 119}))) == std::vector<std::size_t>{2});
  CHECK(segment(std::vector<ScrobbleEvent>{}).empty());

  const auto s = segment(at_minutes({10, 20, 200}));
  CHECK(s[0].start == Timestamp{10min});
  CHECK(s[0].end == Timestamp{20min});
  CHECK(s[1].start == s[1].end);
}

TEST_CASE("segment rejects unsorted or mixed input") {
  CHECK_THROWS_AS(segment(at_minutes({10, 5})), ContractViolation);
  auto mixed = at_minutes({0, 1});
  mixed[1].user_id = "other";
  CHECK_THROWS_AS(segment(mixed), ContractViolation);
  CHECK_THROWS_AS(segment(at_minutes({0}), 0s), DomainError);
}

TEST_CASE("segment matches the brute-force splitter and is a partition") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<long long> ts;
    long long t = 0;
    const auto n = uniform_index(rng, 50);
    for (std::size_t i = 0; i < n; ++i) {
      t += static_cast<long long>(uniform_index(rng, 4)) == 0 ? 7200 : static_cast<long long>(uniform_index(rng, 10000));
      ts.push_back(t);
    }
    std::vector<ScrobbleEvent> events;
    for (auto x : ts) events.push_back({"u", "t" + std::to_string(x), Timestamp{std::chrono::seconds{x}}});

    const auto sessions = segment(events);
    CHECK(sizes(sessions) == oracle::brute_split(ts, 7200));

    std::vector<ScrobbleEvent> joined;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
      joined.insert(joined.end(), sessions[i].events.begin(), sessions[i].events.end());
      if (i > 0) CHECK(sessions[i].start - sessions[i - 1].end >= 2h);
    }
    CHECK(joined == events);

    // Raising the threshold never adds sessions.
    CHECK(segment(events, 3h).size() <= sessions.size());
    CHECK(segment(events, 1h).size() >= sessions.size());
  }
}

TEST_CASE("split_by_user and sessions.csv") {
  std::vector<ScrobbleEvent> events = at_minutes({0, 500}, "a");
  auto b = at_minutes({5}, "b");
  events.insert(events.end(), b.begin(), b.end());
  const auto runs = split_by_user(events);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].size() == 2);

  std::vector<Session> all;
  for (auto run : runs) {
    auto s = segment(run);
    all.insert(all.end(), s.begin(), s.end());
  }
  std::ostringstream out;
  write_sessions_csv(out, all);
  CHECK(out.str() ==
        "user_id,session_index,start,end,n_events\n"
        "a,0,1970-01-01T00:00:00Z,1970-01-01T00:00:00Z,1\n"
        "a,1,1970-01-01T08:20:00Z,1970-01-01T08:20:00Z,1\n"
        "b,0,1970-01-01T00:05:00Z,1970-01-01T00:05:00Z,1\n");
}
