#include "sct/workload_gen.hpp"

#include <algorithm>
#include <cmath>

#include "sct/demand.hpp"
#include "sct/error.hpp"

namespace sct {

namespace {

constexpr PeriodShare kEcuShares[] = {{5, 0.025},   {10, 0.3125}, {20, 0.3125}, {50, 0.0375},
                                      {100, 0.25},  {200, 0.0125}, {1000, 0.05}};
constexpr PeriodShare kBusShares[] = {{5, 0.0263},  {10, 0.3289}, {20, 0.3289}, {50, 0.0395},
                                      {100, 0.2632}, {200, 0.0132}};

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

SecureTask make_task(const std::string& id, TaskKind kind, Tick p) {
  SecureTask t;
  t.id = id;
  t.kind = kind;
  t.p = p;
  return t;
}

// Sets c_reg/c_ext from a target utilization share; mac is the extra cost of
// an extended job as a fraction of c_reg.
void size_task(SecureTask& t, double u, double mac, int l, int f) {
  const double auth = l > 0 ? mac * f / l : 0.0;
  const double c = u * static_cast<double>(t.p) / (1.0 + auth);
  t.c_reg = std::clamp<Tick>(std::llround(c), 1, t.p);
  t.c_ext = t.c_reg;
  if (l > 0) t.c_ext = std::min<Tick>(t.p, t.c_reg + std::max<Tick>(1, std::llround(mac * static_cast<double>(t.c_reg))));
}

// Rescales WCETs on one ECU until the realized utilization is close to target.
void rescale(std::vector<SecureTask*>& tasks, double target) {
  for (int iter = 0; iter < 6; ++iter) {
    std::vector<SecureTask> copy;
    for (auto* t : tasks) copy.push_back(*t);
    const double u = utilization(copy);
    if (std::abs(u - target) <= 0.002 || u <= 0) return;
    const double k = target / u;
    for (auto* t : tasks) {
      const Tick delta = t->c_ext - t->c_reg;
      t->c_reg = std::clamp<Tick>(std::llround(static_cast<double>(t->c_reg) * k), 1, t->p);
      if (t->l) t->c_ext = std::min<Tick>(t->p, t->c_reg + std::max<Tick>(1, std::llround(static_cast<double>(delta) * k)));
      else t->c_ext = t->c_reg;
    }
  }
}

double ecu_utilization(const SystemModel& sys, const Ecu& e) { return utilization(sys.ecu_tasks(e)); }

SecureTask* find_mut(SystemModel& sys, const std::string& id) {
  for (auto& tx : sys.transactions)
    for (SecureTask* t : {&tx.sens, &tx.net, &tx.ctrl})
      if (t->id == id) return t;
  for (auto& t : sys.background)
    if (t.id == id) return &t;
  return nullptr;
}

// Sizes all tasks of every ECU: background shares come from UUniFast over
// the utilization left after the fixed (already sized) tasks.
void size_ecus(SystemModel& sys, std::mt19937_64& rng, double target, double mac_lo, double mac_hi,
               bool transactions_sized) {
  for (const auto& e : sys.ecus) {
    std::vector<SecureTask*> tasks;
    std::vector<SecureTask*> open;
    for (const auto& id : e.tasks) {
      SecureTask* t = find_mut(sys, id);
      tasks.push_back(t);
      if (!transactions_sized || t->kind == TaskKind::background) open.push_back(t);
    }
    double fixed = 0;
    if (transactions_sized) {
      std::vector<SecureTask> sized;
      for (auto* t : tasks)
        if (t->kind != TaskKind::background) sized.push_back(*t);
      fixed = utilization(sized);
    }
    if (fixed > target - 0.01)
      fail(ErrorCode::infeasible_input, "ECU " + e.id + ": transaction load exceeds the utilization target");
    const auto shares = uunifast(rng, open.size(), target - fixed);
    for (std::size_t i = 0; i < open.size(); ++i) {
      SecureTask& t = *open[i];
      const double mac = uniform_real(rng, mac_lo, mac_hi);
      size_task(t, shares[i], mac, t.l.value_or(0), t.f);
    }
    if (transactions_sized) {
      // background only; transaction WCETs stay as given
      std::vector<SecureTask*> bg = open;
      std::vector<SecureTask> sized;
      for (auto* t : tasks)
        if (t->kind != TaskKind::background) sized.push_back(*t);
      rescale(bg, target - utilization(sized));
    } else {
      rescale(tasks, target);
    }
    if (std::abs(ecu_utilization(sys, e) - target) > 0.02)
      fail(ErrorCode::infeasible_input, "ECU " + e.id + ": utilization target not reachable at this tick resolution");
  }
}

}  // namespace

std::span<const PeriodShare> period_table(PeriodColumn column) {
  if (column == PeriodColumn::ecu) return kEcuShares;
  return kBusShares;
}

std::int64_t sample_period_ms(std::mt19937_64& rng, PeriodColumn column) {
  const auto table = period_table(column);
  double total = 0;
  for (const auto& r : table) total += r.share;
  double x = uniform_real(rng, 0.0, total);
  for (const auto& r : table) {
    if (x < r.share) return r.period_ms;
    x -= r.share;
  }
  return table.back().period_ms;
}

Tick frame_time(int payload_bits, double rate_bps, std::int64_t ticks_per_second) {
  if (!(rate_bps > 0)) fail(ErrorCode::invalid_argument, "bus rate must be positive");
  if (payload_bits < 0 || payload_bits > 64) fail(ErrorCode::invalid_argument, "payload must be 0..64 bits");
  if (ticks_per_second <= 0) fail(ErrorCode::invalid_argument, "tick rate must be positive");
  const double ticks = kCanFrameBits * static_cast<double>(ticks_per_second) / rate_bps;
  return std::max<Tick>(1, static_cast<Tick>(std::ceil(ticks - 1e-9)));
}

std::vector<double> uunifast(std::mt19937_64& rng, std::size_t n, double total) {
  std::vector<double> u(n);
  double sum = total;
  for (std::size_t i = 1; i < n; ++i) {
    const double next = sum * std::pow(uniform_real(rng, 0.0, 1.0), 1.0 / static_cast<double>(n - i));
    u[i - 1] = sum - next;
    sum = next;
  }
  if (n > 0) u[n - 1] = sum;
  return u;
}

void validate_gen_spec(const GenSpec& s) {
  auto bad = [](const std::string& m) { fail(ErrorCode::invalid_argument, m); };
  if (s.n_transactions < 1) bad("need at least one transaction");
  if (s.ecu_count < 2) bad("need at least two ECUs");
  if (!(s.target_ecu_utilization > 0 && s.target_ecu_utilization <= 1)) bad("ECU utilization must be in (0, 1]");
  if (!(s.target_bus_utilization > 0 && s.target_bus_utilization <= 1)) bad("bus utilization must be in (0, 1]");
  if (!(s.qoc_share >= 0.25 && s.qoc_share <= 0.5)) bad("qoc_share must be in [0.25, 0.5]");
  if (s.l_min < 1 || s.l_max < s.l_min) bad("bad l range");
  if (s.f_min < 1 || s.f_max < s.f_min || s.f_min > s.l_max) bad("bad f range");
  if (s.mac_cost_min < 0 || s.mac_cost_max < s.mac_cost_min) bad("bad MAC cost range");
  if (s.ticks_per_ms < 1) bad("ticks_per_ms must be positive");
  if (s.bus_rate_bps && !(*s.bus_rate_bps > 0)) bad("bus rate must be positive");
}

SystemModel generate(const GenSpec& spec) {
  validate_gen_spec(spec);
  std::mt19937_64 rng(spec.seed);
  SystemModel sys;
  sys.ticks_per_unit = spec.ticks_per_ms;
  sys.time_unit = "ms";
  for (int e = 0; e < spec.ecu_count; ++e) sys.ecus.push_back({"ECU" + std::to_string(e), {}});
  const Tick ms = spec.ticks_per_ms;

  // transactions
  for (int i = 0; i < spec.n_transactions; ++i) {
    const std::string id = "tx" + std::to_string(i);
    const Tick p = sample_period_ms(rng, PeriodColumn::bus) * ms;
    const int l = uniform_int(rng, spec.l_min, spec.l_max);
    const int f = uniform_int(rng, std::min(spec.f_min, l), std::min(spec.f_max, l));
    const int es = uniform_int(rng, 0, spec.ecu_count - 1);
    int ec = uniform_int(rng, 0, spec.ecu_count - 2);
    if (ec >= es) ++ec;
    auto sens = make_task(id + "_s", TaskKind::sensing, p);
    auto net = make_task(id + "_n", TaskKind::message, p);
    auto ctrl = make_task(id + "_c", TaskKind::control, p);
    sens.c_reg = sens.c_ext = ctrl.c_reg = ctrl.c_ext = net.c_reg = net.c_ext = 1;  // sized below
    sys.transactions.push_back(assemble_transaction(id, sens, net, ctrl, AuthPolicy{std::nullopt, f, l}));
    sys.ecus[es].tasks.push_back(id + "_s");
    sys.ecus[ec].tasks.push_back(id + "_c");
    sys.bus.messages.push_back(id + "_n");
  }

  // background ECU tasks: QoC tasks make up qoc_share of all ECU tasks
  const int qoc_tasks = 2 * spec.n_transactions;
  int bg_tasks = static_cast<int>(std::lround(qoc_tasks / spec.qoc_share)) - qoc_tasks;
  int empty = 0;
  for (const auto& e : sys.ecus) empty += e.tasks.empty();
  bg_tasks = std::max(bg_tasks, empty);
  for (int i = 0; i < bg_tasks; ++i) {
    const std::string id = "bg" + std::to_string(i);
    sys.background.push_back(make_task(id, TaskKind::background, sample_period_ms(rng, PeriodColumn::ecu) * ms));
    auto it = std::find_if(sys.ecus.begin(), sys.ecus.end(), [](const Ecu& e) { return e.tasks.empty(); });
    if (it == sys.ecus.end()) it = sys.ecus.begin() + uniform_int(rng, 0, spec.ecu_count - 1);
    it->tasks.push_back(id);
  }
  size_ecus(sys, rng, spec.target_ecu_utilization, spec.mac_cost_min, spec.mac_cost_max, false);

  // bus
  auto add_frame = [&](int i, Tick p) {
    const std::string id = "bm" + std::to_string(i);
    sys.background.push_back(make_task(id, TaskKind::background, p));
    sys.bus.messages.push_back(id);
  };
  // utilization per tick of frame time
  auto per_tick = [&] {
    double s = 0;
    for (const auto& m : sys.bus_messages()) {
      s += 1.0 / static_cast<double>(m.p);
      if (m.l) s += static_cast<double>(m.f) / (static_cast<double>(m.p) * *m.l);
    }
    return s;
  };
  auto set_frames = [&](Tick frame) {
    for (const auto& id : sys.bus.messages) {
      SecureTask* t = find_mut(sys, id);
      t->c_reg = frame;
      t->c_ext = t->l ? 2 * frame : frame;
      if (t->c_ext > t->p) fail(ErrorCode::infeasible_input, "frame time exceeds a message period");
    }
  };
  const double target = spec.target_bus_utilization;
  if (!spec.bus_rate_bps) {
    const int total = static_cast<int>(std::lround(spec.n_transactions / spec.qoc_share));
    for (int i = 0; i < total - spec.n_transactions; ++i) add_frame(i, sample_period_ms(rng, PeriodColumn::bus) * ms);
    const Tick frame = std::llround(target / per_tick());
    if (frame < 1) fail(ErrorCode::infeasible_input, "bus target needs frames shorter than one tick");
    set_frames(frame);
    sys.bus.rate_bps = kCanFrameBits * static_cast<double>(ms) * 1000.0 / static_cast<double>(frame);
  } else {
    const Tick frame = frame_time(64, *spec.bus_rate_bps, ms * 1000);
    sys.bus.rate_bps = *spec.bus_rate_bps;
    if (frame * per_tick() > target + 0.02)
      fail(ErrorCode::infeasible_input, "transaction messages alone exceed the bus utilization target");
    const Tick longest = period_table(PeriodColumn::bus).back().period_ms * ms;
    for (int i = 0; frame * per_tick() < target - 0.01; ++i) {
      Tick p = sample_period_ms(rng, PeriodColumn::bus) * ms;
      const double now = frame * per_tick();
      if (now + static_cast<double>(frame) / static_cast<double>(p) > target + 0.01) p = longest;
      if (now + static_cast<double>(frame) / static_cast<double>(p) > target + 0.02) break;
      add_frame(i, p);
    }
    set_frames(frame);
  }
  if (std::abs(utilization(sys.bus_messages()) - target) > 0.02)
    fail(ErrorCode::infeasible_input, "bus utilization target not reachable");

  for (auto& t : sys.background) {
    t.phi = 0;
    t.d = t.p;
  }
  const auto rep = validate_system(sys);
  if (!rep.ok()) fail(ErrorCode::invalid_argument, "generated system invalid: " + rep.violations.front());
  return sys;
}

SystemModel case_study_system(const CaseStudySpec& spec) {
  if (spec.ecu_count < 6) fail(ErrorCode::invalid_argument, "case study needs at least six ECUs");
  if (spec.background_tasks_per_ecu < 1 || spec.background_frames < 0 || spec.extra_sensor_frames < 0)
    fail(ErrorCode::invalid_argument, "negative workload counts");
  std::mt19937_64 rng(spec.seed);
  SystemModel sys;
  sys.ticks_per_unit = spec.ticks_per_ms;
  sys.time_unit = "ms";
  const Tick ms = spec.ticks_per_ms;
  auto us = [&](double v) { return std::max<Tick>(1, std::llround(v * static_cast<double>(ms) / 1000.0)); };
  for (int e = 0; e < spec.ecu_count; ++e) sys.ecus.push_back({"ECU" + std::to_string(e), {}});

  struct Plant {
    const char* id;
    int l, f;
  };
  const Plant plants[] = {{"ACC", 5, 3}, {"LK", 10, 2}, {"DM", 10, 1}};
  const Tick p = 20 * ms;
  const Tick frame = frame_time(64, spec.bus_rate_bps, ms * 1000);
  for (int i = 0; i < 3; ++i) {
    const std::string id = plants[i].id;
    auto sens = make_task(id + "_s", TaskKind::sensing, p);
    auto net = make_task(id + "_n", TaskKind::message, p);
    auto ctrl = make_task(id + "_c", TaskKind::control, p);
    sens.c_reg = us(300);
    sens.c_ext = sens.c_reg + us(200);
    net.c_reg = frame;
    net.c_ext = 2 * frame;
    ctrl.c_reg = us(800);
    ctrl.c_ext = ctrl.c_reg + us(200);
    sys.transactions.push_back(
        assemble_transaction(id, sens, net, ctrl, AuthPolicy{std::nullopt, plants[i].f, plants[i].l}, id));
    sys.ecus[i].tasks.push_back(id + "_c");
    sys.ecus[3 + i].tasks.push_back(id + "_s");
    sys.bus.messages.push_back(id + "_n");
  }
  for (int e = 0; e < spec.ecu_count; ++e)
    for (int k = 0; k < spec.background_tasks_per_ecu; ++k) {
      const std::string id = "ECU" + std::to_string(e) + "_bg" + std::to_string(k);
      sys.background.push_back(make_task(id, TaskKind::background, sample_period_ms(rng, PeriodColumn::ecu) * ms));
      sys.ecus[e].tasks.push_back(id);
    }
  size_ecus(sys, rng, spec.ecu_utilization, 0.0, 0.0, true);

  auto add_frame = [&](const std::string& id, Tick period) {
    auto m = make_task(id, TaskKind::background, period);
    m.c_reg = m.c_ext = frame;
    sys.background.push_back(m);
    sys.bus.messages.push_back(id);
  };
  for (int i = 0; i < spec.extra_sensor_frames; ++i) add_frame("sensor" + std::to_string(i), p);
  for (int i = 0; i < spec.background_frames; ++i)
    add_frame("frame" + std::to_string(i), sample_period_ms(rng, PeriodColumn::bus) * ms);
  sys.bus.rate_bps = spec.bus_rate_bps;

  for (auto& t : sys.background) {
    t.phi = 0;
    t.d = t.p;
  }
  const auto rep = validate_system(sys);
  if (!rep.ok()) fail(ErrorCode::invalid_argument, "case study invalid: " + rep.violations.front());
  return sys;
}

}  // namespace sct
