#pragma once

// Listening sessions: a new session starts whenever the gap between two
// consecutive plays of a user is at least the inactivity threshold.

#include <chrono>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lyricscope/corpus.hpp"

namespace lyricscope {

inline constexpr std::chrono::seconds kDefaultSessionGap = std::chrono::hours{2};

struct Session {
  std::string user_id;
  std::vector<ScrobbleEvent> events;
  Timestamp start;
  Timestamp end;
};

// `events` must belong to one user and be sorted by timestamp; otherwise
// throws ContractViolation. A gap equal to `gap` starts a new session.
std::vector<Session> segment(std::span<const ScrobbleEvent> events,
                             std::chrono::seconds gap = kDefaultSessionGap);

// Splits a stream sorted by (user_id, timestamp), as returned by
// parse_scrobbles, into per-user runs.
std::vector<std::span<const ScrobbleEvent>> split_by_user(std::span<const ScrobbleEvent> events);

// user_id,session_index,start,end,n_events
void write_sessions_csv(std::ostream& out, std::span<const Session> sessions);

}  // namespace lyricscope
