#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <latch>
#include <memory>
#include <optional>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "async.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace hogwild {

struct HardwareOptions {
  std::size_t threads = 1;
  std::uint64_t total_writes = 0;
  std::uint64_t seed = 0;
  // Log one read out of every `log_stride` per thread.
  std::uint32_t log_stride = 1;
  // Keep (ticket, site, u, values read) for every published update.
  bool record_updates = false;
  std::optional<Configuration> init;
};

struct UpdateRecord {
  std::uint64_t ticket;
  NodeId site;
  double u;
  std::vector<Spin> reads;  // neighbor values in model.neighbors(site) order
  Spin written;
};

struct HardwareRun {
  Configuration init;
  Configuration final;
  DelayLog log;
  std::vector<UpdateRecord> updates;
  double seconds = 0.0;
};

/// Lock-free multi-threaded HOGWILD! Gibbs on a shared spin array.
///
/// Each site is a single atomic cell, so reads never tear and need no lock.
/// Logical time is the number of published writes: a worker takes a ticket
/// from a global counter, waits for its turn, stores its spin and advances
/// the published count. A read taken when `published` was r and feeding
/// write `ticket` is logged with delay ticket - r, the number of writes that
/// landed between the read and the write it fed. Stops after
/// `total_writes` writes.
inline HardwareRun run_hogwild_hardware(const IsingModel& model, const HardwareOptions& opt) {
  if (opt.threads < 1) throw InvalidArgumentError("hardware engine needs threads >= 1");
  if (opt.log_stride < 1) throw InvalidArgumentError("log stride must be >= 1");
  const std::size_t n = model.size();

  HardwareRun run;
  if (opt.init) {
    if (opt.init->size() != n) throw DimensionError("initial configuration length mismatch");
    run.init = *opt.init;
  } else {
    RngStream init_rng(opt.seed, 0);
    run.init = Configuration::uniform_random(n, init_rng);
  }

  auto cells = std::make_unique<std::atomic<Spin>[]>(n);
  for (std::size_t i = 0; i < n; ++i) cells[i].store(run.init[i], std::memory_order_relaxed);
  std::atomic<std::uint64_t> next_ticket{0};
  std::atomic<std::uint64_t> published{0};

  struct WorkerOut {
    DelayLog log;
    std::vector<UpdateRecord> updates;
  };
  std::vector<WorkerOut> outs(opt.threads);
  std::latch start(static_cast<std::ptrdiff_t>(opt.threads) + 1);

  auto worker = [&](std::size_t tid) {
    RngStream rng(opt.seed, tid + 1);
    WorkerOut& out = outs[tid];
    std::vector<std::pair<NodeId, std::uint64_t>> pending;
    std::vector<Spin> reads;
    std::uint64_t read_count = 0;
    start.arrive_and_wait();
    for (;;) {
      if (published.load(std::memory_order_relaxed) >= opt.total_writes) break;
      const std::size_t i = rng.index(n);
      const double u = rng.uniform();
      pending.clear();
      reads.clear();
      const double h = model.local_field(i, [&](NodeId j) {
        if (++read_count % opt.log_stride == 0) {
          pending.emplace_back(j, published.load(std::memory_order_acquire));
        }
        const Spin v = cells[j].load(std::memory_order_acquire);
        if (opt.record_updates) reads.push_back(v);
        return v;
      });
      const Spin s = threshold_spin(u, p_plus_from_field(h));

      const std::uint64_t ticket = next_ticket.fetch_add(1, std::memory_order_acq_rel);
      if (ticket >= opt.total_writes) break;
      while (published.load(std::memory_order_acquire) != ticket) std::this_thread::yield();
      cells[i].store(s, std::memory_order_release);
      published.store(ticket + 1, std::memory_order_release);

      for (const auto& [j, r] : pending) out.log.add(ticket, j, static_cast<std::uint32_t>(ticket - r));
      if (opt.record_updates) out.updates.push_back({ticket, NodeId(i), u, reads, s});
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(opt.threads);
    for (std::size_t t = 0; t < opt.threads; ++t) pool.emplace_back(worker, t);
    const auto t0 = std::chrono::steady_clock::now();
    start.arrive_and_wait();
    pool.clear();
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  std::vector<Spin> final(n);
  for (std::size_t i = 0; i < n; ++i) final[i] = cells[i].load(std::memory_order_relaxed);
  run.final = Configuration(std::move(final));
  for (auto& o : outs) {
    run.log.append(o.log);
    for (auto& r : o.updates) run.updates.push_back(std::move(r));
  }
  std::sort(run.log.records().begin(), run.log.records().end(), [](const auto& a, const auto& b) {
    return std::tie(a.write_index, a.node) < std::tie(b.write_index, b.node);
  });
  std::sort(run.updates.begin(), run.updates.end(),
            [](const auto& a, const auto& b) { return a.ticket < b.ticket; });
  return run;
}

/// Re-executes recorded hardware updates in ticket order on a VersionedTrace,
/// recomputing each spin from the values that update actually read.
inline VersionedTrace replay_updates(const IsingModel& model, const Configuration& init,
                                     const std::vector<UpdateRecord>& updates) {
  VersionedTrace trace(init);
  for (const auto& rec : updates) {
    if (rec.ticket != trace.step()) throw ValidationError("update tickets are not contiguous");
    const auto nb = model.neighbors(rec.site);
    if (rec.reads.size() != nb.size()) throw DimensionError("recorded reads do not match degree");
    double h = model.node_weight(rec.site);
    for (std::size_t k = 0; k < nb.size(); ++k) h += nb[k].weight * rec.reads[k];
    const Spin s = threshold_spin(rec.u, p_plus_from_field(h));
    if (s != rec.written) throw ValidationError("replayed spin differs from the published write");
    trace.write(rec.site, s);
  }
  return trace;
}

}  // namespace hogwild
