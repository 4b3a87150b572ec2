#pragma once

#include <string>

namespace mgsim {

enum class EventKind {
  BreakerOpen,
  BreakerClose,
  LoadStep,
  DgRedispatch,
  AttackStart,
  AttackEnd,
};

/// One timed discrete action.  Only the fields relevant to the kind are
/// read: breaker events use (from, to); load steps use (bus, p, q,
/// relative); redispatch uses (device, p_set, to_measured).  Events are
/// applied at the first step boundary at or after `at`, in declaration
/// order among ties.
struct Event {
  double at = 0.0;
  EventKind kind = EventKind::LoadStep;
  int from = -1;
  int to = -1;
  int bus = -1;
  double p = 0.0;            ///< pu on system base
  double q = 0.0;            ///< pu on system base
  bool relative = false;     ///< load step adds to the existing demand
  std::string device;        ///< redispatch target, empty means every DG
  double p_set = 0.0;        ///< pu on the target's own base
  bool to_measured = false;  ///< redispatch to the current injection instead
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::BreakerOpen: return "breaker_open";
    case EventKind::BreakerClose: return "breaker_close";
    case EventKind::LoadStep: return "load_step";
    case EventKind::DgRedispatch: return "dg_redispatch";
    case EventKind::AttackStart: return "attack_start";
    case EventKind::AttackEnd: return "attack_end";
  }
  return "unknown";
}

}  // namespace mgsim
