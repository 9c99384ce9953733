#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sct/model.hpp"

namespace sct {

enum class EventKind { release, start, preempt, resume, complete, deadline_miss };

const char* to_string(EventKind k);

struct TraceEvent {
  Tick time = 0;
  std::string task;
  std::int64_t job = 0;
  EventKind kind = EventKind::release;
  bool operator==(const TraceEvent&) const = default;
};

struct Trace {
  std::vector<TraceEvent> events;
  Tick horizon = 0;

  std::size_t misses() const;
  std::optional<TraceEvent> first_miss() const;
  bool operator==(const Trace&) const = default;
};

/// Aperiodic work served below every periodic job (non-real-time frames,
/// opportunistic MAC work). Served in release order; never reports misses.
struct ExtraJob {
  std::string id;
  std::int64_t job = 0;
  Tick release = 0;
  Tick cost = 0;
};

/// Preemptive EDF from t = 0. Jobs released before the horizon; events up to
/// and including the horizon. Ties: earlier deadline, lower task index, lower
/// job index.
Trace simulate_ecu(std::span<const SecureTask> tasks, Tick horizon,
                   std::span<const ExtraJob> extra = {});

/// Non-preemptive EDF: whenever the bus goes idle the most urgent pending
/// frame starts and runs to completion.
Trace simulate_network(std::span<const SecureTask> msgs, Tick horizon,
                       std::span<const ExtraJob> extra = {});

struct SystemTraces {
  std::map<std::string, Trace> ecus;
  Trace bus;
  std::size_t misses() const;
};

SystemTraces simulate_system(const SystemModel& sys, Tick horizon);

struct TimingViolation {
  std::string transaction;
  std::int64_t job = -1;  // -1 for static (parameter-level) violations
  std::string what;
};

struct TimingReport {
  std::vector<TimingViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Precedence and end-to-end checks per transaction job, from the parameters
/// and from observed completion times.
TimingReport check_transaction_timing(const SystemModel& sys, const SystemTraces& traces);

/// CSV with header time,task,job,event.
std::string trace_csv(const Trace& trace);

}  // namespace sct
