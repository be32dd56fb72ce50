#include "lyricscope/sessions.hpp"

#include <ostream>

#include "lyricscope/error.hpp"

namespace lyricscope {

std::vector<Session> segment(std::span<const ScrobbleEvent> events, std::chrono::seconds gap) {
  if (gap <= std::chrono::seconds::zero()) throw DomainError("session gap must be positive");
  std::vector<Session> sessions;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    if (i > 0) {
      const auto& prev = events[i - 1];
      if (ev.user_id != prev.user_id) {
        throw ContractViolation("segment: events from users '" + prev.user_id + "' and '" +
                                ev.user_id + "' mixed in one stream");
      }
      if (ev.timestamp < prev.timestamp) {
        throw ContractViolation("segment: events for user '" + ev.user_id +
                                "' are not sorted by timestamp (index " + std::to_string(i) + ")");
      }
    }
    if (sessions.empty() || ev.timestamp - events[i - 1].timestamp >= gap) {
      sessions.push_back(Session{ev.user_id, {}, ev.timestamp, ev.timestamp});
    }
    auto& current = sessions.back();
    current.events.push_back(ev);
    current.end = ev.timestamp;
  }
  return sessions;
}

std::vector<std::span<const ScrobbleEvent>> split_by_user(std::span<const ScrobbleEvent> events) {
  std::vector<std::span<const ScrobbleEvent>> runs;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= events.size(); ++i) {
    if (i == events.size() || events[i].user_id != events[begin].user_id) {
      runs.push_back(events.subspan(begin, i - begin));
      begin = i;
    }
  }
  return runs;
}

void write_sessions_csv(std::ostream& out, std::span<const Session> sessions) {
  out << "user_id,session_index,start,end,n_events\n";
  std::string last_user;
  std::size_t index = 0;
  for (const auto& s : sessions) {
    if (s.user_id != last_user) {
      last_user = s.user_id;
      index = 0;
    }
    out << io::quote_field(s.user_id) << ',' << index++ << ',' << io::format_iso8601(s.start) << ','
        << io::format_iso8601(s.end) << ',' << s.events.size() << '\n';
  }
}

}  // namespace lyricscope
