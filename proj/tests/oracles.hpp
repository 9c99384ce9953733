#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "sct/demand.hpp"
#include "sct/synthesis.hpp"

namespace oracle {

using namespace sct;

// Exhaustive enumeration in the search order, checked with the pairwise
// demand evaluation. Returns the first feasible vector.
inline std::optional<std::vector<Tick>> enumerate(const SynthesisProblem& pb, std::uint64_t* count = nullptr) {
  const auto slots = free_slots(pb);
  std::vector<Bounds> dom;
  for (auto s : slots) dom.push_back(slot_domain(pb, s));
  std::vector<Tick> v;
  for (auto b : dom) v.push_back(b.lo);
  for (const auto& b : dom)
    if (b.lo > b.hi) return std::nullopt;
  while (true) {
    if (count) ++*count;
    const auto tasks = with_values(pb, slots, v);
    bool ok = true;
    for (const auto& c : pb.couplings) {
      Tick lhs = 0;
      for (const auto& [slot, coef] : c.terms) {
        const auto& t = tasks[slot.task];
        lhs += coef * (slot.field == Field::s ? *t.s : slot.field == Field::phi ? *t.phi : *t.d);
      }
      ok = ok && (c.sense == Sense::eq ? lhs == c.rhs : c.sense == Sense::le ? lhs <= c.rhs : lhs >= c.rhs);
    }
    for (const auto& r : pb.resources) {
      if (!ok) break;
      std::vector<SecureTask> sub;
      Tick blocking = r.c_max_nrt;
      for (auto i : r.tasks) {
        sub.push_back(tasks[i]);
        blocking = std::max(blocking, tasks[i].c_ext);
      }
      if (sub.empty()) continue;
      ok = demand_check_reference(sub, r.non_preemptive ? blocking : 0, VerdictStatus::rejected).ok();
    }
    if (ok) return v;
    // odometer, last slot fastest
    std::size_t k = v.size();
    while (k > 0) {
      --k;
      if (v[k] < dom[k].hi) {
        ++v[k];
        for (std::size_t j = k + 1; j < v.size(); ++j) v[j] = dom[j].lo;
        break;
      }
      if (k == 0) return std::nullopt;
    }
    if (v.empty()) return std::nullopt;
  }
}

inline std::vector<Tick> values_of(const SynthesisProblem& pb, const SynthesisResult& r) {
  std::vector<Tick> out;
  for (auto s : free_slots(pb)) {
    const auto& a = r.assignment.at(pb.tasks[s.task].id);
    out.push_back(s.field == Field::s ? *a.s : s.field == Field::phi ? a.phi : a.d);
  }
  return out;
}

struct TxSpec {
  Tick p, c_s, c_n, c_c, dc;
  int l, f;
};

// Baseline parameters: three equal windows of the period.
inline ControlTransaction make_tx(const std::string& id, const TxSpec& x, int s) {
  const Tick w = x.p / 3;
  auto sens = fx::task((id + "s").c_str(), x.c_s, x.c_s + x.dc, x.p, 0, w, {}, 1, {}, TaskKind::sensing);
  auto net = fx::task((id + "n").c_str(), x.c_n, x.c_n + x.dc, x.p, w, w, {}, 1, {}, TaskKind::message);
  auto ctrl = fx::task((id + "c").c_str(), x.c_c, x.c_c + x.dc, x.p, 2 * w, x.p - 2 * w, {}, 1, {}, TaskKind::control);
  return assemble_transaction(id, sens, net, ctrl, AuthPolicy{s, x.f, x.l});
}

// Transactions share two ECUs: sensing tasks on E1, control tasks on E2.
inline SystemModel make_system(const std::vector<ControlTransaction>& txs) {
  SystemModel sys;
  sys.transactions = txs;
  sys.ecus = {{"E1", {}}, {"E2", {}}};
  for (const auto& tx : txs) {
    sys.ecus[0].tasks.push_back(tx.sens.id);
    sys.ecus[1].tasks.push_back(tx.ctrl.id);
    sys.bus.messages.push_back(tx.net.id);
  }
  return sys;
}

inline SystemModel tiny_system(std::mt19937_64& rng) {
  static const Tick periods[] = {6, 10, 12, 20};
  const int n = std::uniform_int_distribution<int>(1, 3)(rng);
  std::vector<ControlTransaction> txs;
  for (int i = 0; i < n; ++i) {
    TxSpec x{};
    x.p = periods[std::uniform_int_distribution<int>(0, 3)(rng)];
    auto c = [&] { return std::uniform_int_distribution<Tick>(1, std::max<Tick>(1, x.p / 6))(rng); };
    x.c_s = c();
    x.c_n = c();
    x.c_c = c();
    x.dc = std::uniform_int_distribution<Tick>(0, 1)(rng);
    x.l = std::uniform_int_distribution<int>(1, 3)(rng);
    x.f = std::uniform_int_distribution<int>(1, x.l)(rng);
    txs.push_back(make_tx("x" + std::to_string(i), x, 0));
  }
  return make_system(txs);
}

// Frees random parameters of the problem while the product of domain sizes
// stays below the budget.
inline SynthesisProblem free_some(SystemModel sys, std::mt19937_64& rng, std::uint64_t budget) {
  std::vector<std::pair<std::size_t, int>> cand;  // (transaction, field 0..6)
  for (std::size_t i = 0; i < sys.transactions.size(); ++i)
    for (int f = 0; f < 7; ++f) cand.push_back({i, f});
  std::shuffle(cand.begin(), cand.end(), rng);
  std::uint64_t product = 1;
  const int want = std::uniform_int_distribution<int>(0, 4)(rng);
  int freed = 0;
  for (auto [i, f] : cand) {
    if (freed == want) break;
    auto& tx = sys.transactions[i];
    const auto size = static_cast<std::uint64_t>(f == 0 ? tx.policy.l - tx.policy.f + 1 : tx.p);
    if (product * size > budget) continue;
    product *= size;
    ++freed;
    SecureTask* members[] = {&tx.sens, &tx.net, &tx.ctrl};
    if (f == 0) {
      tx.policy.s.reset();
      for (auto* t : members) t->s.reset();
    } else if (f % 2 == 1) {
      members[(f - 1) / 2]->phi.reset();
    } else {
      members[(f - 2) / 2]->d.reset();
    }
  }
  return problem_from_system(sys);
}

}  // namespace oracle
