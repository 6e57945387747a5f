#include "northeast/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "northeast/measures.hpp"
#include "northeast/percolation.hpp"

namespace ne {

std::string_view to_string(InitialKind k) {
  switch (k) {
    case InitialKind::Bernoulli: return "bernoulli";
    case InitialKind::AllZeros: return "all-zeros";
    case InitialKind::AllOnes: return "all-ones";
    case InitialKind::QuadrantZero: return "quadrant-zero";
  }
  return "?";
}

InitialKind parse_initial(std::string_view text) {
  for (InitialKind k : {InitialKind::Bernoulli, InitialKind::AllZeros, InitialKind::AllOnes,
                        InitialKind::QuadrantZero}) {
    if (to_string(k) == text) return k;
  }
  throw std::invalid_argument("unknown initial law '" + std::string(text) +
                              "' (bernoulli, all-zeros, all-ones, quadrant-zero)");
}

void ExperimentPlan::validate() const {
  require_open_unit(p, "plan");
  if (replicas < 1) throw std::invalid_argument("plan: replicas must be at least 1");
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw std::invalid_argument("plan: t_max must be finite and >= 0");
  if (boundary == BoundaryRule::HalfPlaneExperiment) {
    throw std::invalid_argument("plan: forward experiments need a ghost or periodic boundary");
  }
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    const double t = sample_times[i];
    if (!(t >= 0.0) || t > t_max) throw std::invalid_argument("plan: sample times must lie in [0, t_max]");
    if (i && !(t > sample_times[i - 1])) throw std::invalid_argument("plan: sample times must increase");
  }
}

std::uint64_t replica_seed(const ExperimentPlan& plan, std::uint64_t r) { return derive_seed(plan.seed, r); }

Configuration replica_initial(const ExperimentPlan& plan, std::uint64_t r, const Region& region) {
  switch (plan.initial) {
    case InitialKind::AllZeros: return Configuration(region, plan.boundary, 0);
    case InitialKind::AllOnes: return Configuration(region, plan.boundary, 1);
    case InitialKind::Bernoulli: return sample_bernoulli(region, plan.p, replica_seed(plan, r), plan.boundary);
    case InitialKind::QuadrantZero: {
      Configuration c = sample_bernoulli(region, plan.p, replica_seed(plan, r), plan.boundary);
      for (std::size_t i = 0; i < region.size(); ++i) {
        const Site s = region.site_at(i);
        if (s.x >= 0 && s.y >= 0) c.spins()[i] = 0;
      }
      return c;
    }
  }
  throw std::logic_error("replica_initial: bad initial kind");
}

Region cone_window(const Region& window, const Region& targets) {
  const Site ne = targets.ne_corner();
  const Site top{std::min(ne.x, window.ne_corner().x), std::min(ne.y, window.ne_corner().y)};
  if (top.x < window.origin().x || top.y < window.origin().y) {
    throw std::invalid_argument("cone_window: targets lie south-west of the window");
  }
  return bounding_region(window.origin(), top);
}

namespace {

Region simulation_region(const ExperimentPlan& plan, const Region& targets) {
  const bool ghost = plan.boundary == BoundaryRule::GhostOnes || plan.boundary == BoundaryRule::GhostZeros;
  return plan.cone_restrict && ghost ? cone_window(plan.window, targets) : plan.window;
}

GraphicalEngine replica_engine(const ExperimentPlan& plan, std::uint64_t r, const Region& region) {
  return GraphicalEngine(replica_initial(plan, r, region), plan.p,
                         EventSeed{replica_seed(plan, r), StreamDomain::Dynamics});
}

void require_inside(const Region& window, const Region& block, const char* what) {
  Region meet;
  if (!intersect(window, block, meet) || !(meet == block)) {
    throw std::invalid_argument(std::string(what) + ": block must lie inside the window");
  }
}

}  // namespace

void parallel_replicas(std::uint64_t n, unsigned workers, const std::function<void(std::uint64_t)>& body) {
  if (workers <= 1 || n <= 1) {
    for (std::uint64_t r = 0; r < n; ++r) body(r);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  const unsigned k = static_cast<unsigned>(std::min<std::uint64_t>(workers, n));
  for (unsigned w = 0; w < k; ++w) {
    pool.emplace_back([&] {
      for (std::uint64_t r; !failed && (r = next++) < n;) {
        try {
          body(r);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<Site> reset_order(const Region& block) {
  std::vector<Site> s = block.sites();
  std::sort(s.begin(), s.end(), [](Site a, Site b) {
    return a.x + a.y != b.x + b.y ? a.x + a.y > b.x + b.y : a.y > b.y;
  });
  return s;
}

LambdaResetTracker::LambdaResetTracker(std::vector<Site> order)
    : order_(std::move(order)), last_(order_.size(), -1.0) {
  if (order_.empty()) throw std::invalid_argument("LambdaResetTracker: empty order");
}

bool LambdaResetTracker::feed(const ResetLogEntry& e) {
  if (done_) return true;
  const auto it = std::find(order_.begin(), order_.end(), e.site);
  if (it == order_.end()) return false;
  const std::size_t k = static_cast<std::size_t>(it - order_.begin());
  last_[k] = e.time;
  if (k + 1 != order_.size()) return false;
  for (std::size_t j = 0; j < last_.size(); ++j) {
    if (last_[j] < 0.0 || (j && !(last_[j - 1] < last_[j]))) return false;
  }
  done_ = e.time;
  return true;
}

std::optional<double> detect_lambda_reset(const std::vector<ResetLogEntry>& log, const std::vector<Site>& order) {
  LambdaResetTracker tracker(order);
  for (const ResetLogEntry& e : log) {
    if (tracker.feed(e)) break;
  }
  return tracker.completed();
}

ExponentialFit fit_exponential_decay(const std::vector<double>& t, const std::vector<double>& y,
                                     const std::vector<double>& se, double z, std::size_t min_points) {
  if (t.size() != y.size() || t.size() != se.size()) throw std::invalid_argument("fit: length mismatch");
  std::vector<double> x, ly, w;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(y[i] > 0.0) || !(y[i] > z * se[i])) {
      if (!x.empty()) break;
      continue;
    }
    if (se[i] == 0.0) continue;
    x.push_back(t[i]);
    ly.push_back(std::log(y[i]));
    w.push_back((y[i] / se[i]) * (y[i] / se[i]));
  }
  ExponentialFit f;
  f.points = x.size();
  if (x.size() < min_points) {
    f.reason = "only " + std::to_string(x.size()) + " points above " + std::to_string(z) + " standard errors";
    return f;
  }
  const stats::LinearFit lf = stats::weighted_linear_fit(x, ly, w);
  f.ok = true;
  f.rate = -lf.slope;
  f.log_prefactor = lf.intercept;
  f.r2 = lf.r2;
  f.t_first = x.front();
  f.t_last = x.back();
  return f;
}

std::pair<double, double> tv_noise_floor(std::size_t sites, double p, std::uint64_t n, std::uint64_t seed,
                                         int repeats) {
  if (sites > 16) throw std::invalid_argument("tv_noise_floor: too many sites");
  const Eigen::VectorXd nu = product_measure(sites, p);
  std::vector<double> cdf(static_cast<std::size_t>(nu.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < nu.size(); ++i) cdf[static_cast<std::size_t>(i)] = acc += nu[i];
  const rng::Key key = rng::key_from_seed(seed);
  std::vector<double> tvs;
  std::vector<double> emp(cdf.size());
  for (int rep = 0; rep < repeats; ++rep) {
    std::fill(emp.begin(), emp.end(), 0.0);
    for (std::uint64_t i = 0; i < n; ++i) {
      const rng::Counter c{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(rep), 0,
                           stream_tag(StreamDomain::Null, 0, i)};
      const double u = rng::to_open_unit(rng::philox_u64(c, key)) * acc;
      const auto k = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      emp[std::min(k, emp.size() - 1)] += 1.0 / static_cast<double>(n);
    }
    tvs.push_back(stats::total_variation(emp, std::span<const double>(nu.data(), cdf.size())));
  }
  return {stats::mean(tvs), std::sqrt(stats::variance(tvs))};
}

MixingSeries block_mixing(const ExperimentPlan& plan, const Region& block) {
  plan.validate();
  require_inside(plan.window, block, "block_mixing");
  if (block.size() > 9) throw std::invalid_argument("block_mixing: at most 9 sites");
  const Region sim = simulation_region(plan, block);
  const std::size_t nt = plan.sample_times.size();
  std::vector<std::uint16_t> patterns(plan.replicas * nt);
  std::vector<std::size_t> idx;
  for (const Site s : block.sites()) idx.push_back(sim.index_of(s));

  parallel_replicas(plan.replicas, plan.workers, [&](std::uint64_t r) {
    GraphicalEngine eng = replica_engine(plan, r, sim);
    for (std::size_t i = 0; i < nt; ++i) {
      eng.run_until(plan.sample_times[i]);
      const auto spins = eng.state().config.spins();
      std::uint16_t pat = 0;
      for (std::size_t b = 0; b < idx.size(); ++b) pat |= static_cast<std::uint16_t>(spins[idx[b]] << b);
      patterns[r * nt + i] = pat;
    }
  });

  MixingSeries out;
  out.block = block;
  out.times = plan.sample_times;
  const Eigen::VectorXd nu = product_measure(block.size(), plan.p);
  const std::size_t cells = static_cast<std::size_t>(nu.size());
  const auto n = static_cast<double>(plan.replicas);
  for (std::size_t i = 0; i < nt; ++i) {
    std::vector<std::uint64_t> counts(cells, 0);
    for (std::uint64_t r = 0; r < plan.replicas; ++r) ++counts[patterns[r * nt + i]];
    std::vector<double> emp(cells);
    for (std::size_t c = 0; c < cells; ++c) emp[c] = static_cast<double>(counts[c]) / n;
    out.tv.push_back(stats::total_variation(emp, std::span<const double>(nu.data(), cells)));
    std::uint64_t corner = 0;
    for (std::size_t c = 0; c < cells; ++c) corner += (c & 1u) ? counts[c] : 0;
    out.corner_one_fraction.push_back(static_cast<double>(corner) / n);
    out.counts.push_back(std::move(counts));
  }
  std::tie(out.noise_mean, out.noise_sd) = tv_noise_floor(block.size(), plan.p, plan.replicas, plan.seed);
  return out;
}

CorrelationSeries autocorrelation(const ExperimentPlan& plan, Site site) {
  plan.validate();
  if (!plan.window.contains(site)) throw std::invalid_argument("autocorrelation: site outside the window");
  const Region sim = simulation_region(plan, Region(site, 1, 1));
  const std::size_t i0 = sim.index_of(site);
  const std::size_t nt = plan.sample_times.size();
  std::vector<std::uint8_t> start(plan.replicas);
  std::vector<std::uint8_t> later(plan.replicas * nt);
  parallel_replicas(plan.replicas, plan.workers, [&](std::uint64_t r) {
    GraphicalEngine eng = replica_engine(plan, r, sim);
    start[r] = eng.state().config[i0];
    for (std::size_t i = 0; i < nt; ++i) {
      eng.run_until(plan.sample_times[i]);
      later[r * nt + i] = eng.state().config[i0];
    }
  });

  CorrelationSeries out;
  out.site = site;
  out.times = plan.sample_times;
  const auto n = static_cast<double>(plan.replicas);
  double m0 = 0.0;
  for (auto v : start) m0 += v;
  m0 /= n;
  const double var0 = m0 - m0 * m0;
  for (std::size_t i = 0; i < nt; ++i) {
    double mt = 0.0, m0t = 0.0;
    for (std::uint64_t r = 0; r < plan.replicas; ++r) {
      mt += later[r * nt + i];
      m0t += start[r] & later[r * nt + i];
    }
    mt /= n;
    m0t /= n;
    const double rho = var0 > 0.0 ? (m0t - m0 * mt) / var0 : std::numeric_limits<double>::quiet_NaN();
    out.rho.push_back(rho);
    out.se.push_back((1.0 - rho * rho) / std::sqrt(n));
    out.one_fraction.push_back(mt);
  }
  std::vector<double> t, y, se;
  for (std::size_t i = 0; i < nt; ++i) {
    if (out.times[i] <= 0.0) continue;
    t.push_back(out.times[i]);
    y.push_back(out.rho[i]);
    // The delta-method error vanishes as rho -> 1; a floor keeps the first
    // points from taking all the weight.
    se.push_back(std::max(out.se[i], 0.1 / std::sqrt(n)));
  }
  out.fit = fit_exponential_decay(t, y, se);
  return out;
}

double TauTail::median() const {
  std::vector<double> v = taus;
  if (v.empty()) return kNever;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

TauTail tau_lambda_tail(const ExperimentPlan& plan, const Region& block) {
  plan.validate();
  require_inside(plan.window, block, "tau_lambda_tail");
  const Region sim = simulation_region(plan, block);
  const std::vector<Site> order = reset_order(block);
  TauTail out;
  out.block = block;
  out.taus.assign(plan.replicas, kNever);
  parallel_replicas(plan.replicas, plan.workers, [&](std::uint64_t r) {
    GraphicalEngine eng = replica_engine(plan, r, sim);
    LambdaResetTracker tracker(order);
    eng.set_observer([&](const ResetLogEntry& e) { tracker.feed(e); });
    while (!tracker.completed() && eng.next_event_time() <= plan.t_max) eng.step();
    if (tracker.completed()) out.taus[r] = *tracker.completed();
  });

  out.times = plan.sample_times;
  if (out.times.empty()) {
    for (int k = 0; k <= 100; ++k) out.times.push_back(plan.t_max * k / 100.0);
  }
  const auto n = static_cast<double>(plan.replicas);
  out.completed = static_cast<std::size_t>(std::count_if(out.taus.begin(), out.taus.end(),
                                                         [](double v) { return v != kNever; }));
  std::vector<double> sorted = out.taus;
  std::sort(sorted.begin(), sorted.end());
  for (const double t : out.times) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    const double s = 1.0 - static_cast<double>(below) / n;
    out.survival.push_back(s);
    out.se.push_back(std::sqrt(s * (1.0 - s) / n));
  }
  if (out.completed < 100) {
    out.fit.reason = "only " + std::to_string(out.completed) + " replicas completed the sweep";
  } else {
    out.fit = fit_exponential_decay(out.times, out.survival, out.se);
  }
  return out;
}

double RegenerationCheck::z_score(double p) const {
  if (!reset) return 0.0;
  return (fraction() - p) / std::sqrt(p * (1.0 - p) / static_cast<double>(reset));
}

RegenerationCheck regeneration_check(const ExperimentPlan& plan, Site site, double t) {
  plan.validate();
  if (!plan.window.contains(site)) throw std::invalid_argument("regeneration_check: site outside the window");
  const Region sim = simulation_region(plan, Region(site, 1, 1));
  const std::size_t i0 = sim.index_of(site);
  std::vector<std::int8_t> result(plan.replicas, -1);
  parallel_replicas(plan.replicas, plan.workers, [&](std::uint64_t r) {
    GraphicalEngine eng = replica_engine(plan, r, sim);
    eng.run_until(t);
    if (eng.state().first_reset[i0] <= t) result[r] = static_cast<std::int8_t>(eng.state().config[i0]);
  });
  RegenerationCheck out;
  out.site = site;
  out.t = t;
  for (const auto v : result) {
    if (v < 0) continue;
    ++out.reset;
    out.ones += static_cast<std::uint64_t>(v);
  }
  return out;
}

FreezeSeries freeze_fraction(const ExperimentPlan& plan) {
  plan.validate();
  const std::size_t nt = plan.sample_times.size();
  const auto sites = static_cast<double>(plan.window.size());
  std::vector<double> frac(plan.replicas * nt), frozen(plan.replicas);
  std::vector<std::uint8_t> mono(plan.replicas, 1);
  parallel_replicas(plan.replicas, plan.workers, [&](std::uint64_t r) {
    GraphicalEngine eng = replica_engine(plan, r, plan.window);
    const auto f = frozen_zero_cluster(eng.state().config);
    frozen[r] = static_cast<double>(std::count(f.begin(), f.end(), 1)) / sites;
    double prev = 1.0;
    for (std::size_t i = 0; i < nt; ++i) {
      eng.run_until(plan.sample_times[i]);
      const auto& resets = eng.state().resets;
      const double v = static_cast<double>(std::count(resets.begin(), resets.end(), 0)) / sites;
      if (v > prev) mono[r] = 0;
      prev = v;
      frac[r * nt + i] = v;
    }
  });
  FreezeSeries out;
  out.times = plan.sample_times;
  for (std::size_t i = 0; i < nt; ++i) {
    double s = 0.0;
    for (std::uint64_t r = 0; r < plan.replicas; ++r) s += frac[r * nt + i];
    out.fraction.push_back(s / static_cast<double>(plan.replicas));
  }
  out.static_frozen = stats::mean(frozen);
  out.monotone = std::all_of(mono.begin(), mono.end(), [](auto v) { return v == 1; });
  return out;
}

std::vector<std::uint8_t> query_region(const std::vector<std::uint8_t>& influenced, int width, int height) {
  std::vector<std::uint8_t> q(influenced.size(), 0);
  const auto at = [&](int x, int y) -> bool {
    if (x < 0 || y < 0) return true;  // outside the quadrant
    return influenced[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
      q[i] = influenced[i] || (at(x, y - 1) && at(x - 1, y));
    }
  }
  return q;
}

double scaled_hausdorff(const std::vector<std::uint8_t>& a, double ta, const std::vector<std::uint8_t>& b,
                        double tb, int width, int height) {
  if (!(ta > 0.0 && tb > 0.0)) throw std::invalid_argument("scaled_hausdorff: times must be positive");
  const auto w = static_cast<std::size_t>(width);
  const bool a_empty = std::find(a.begin(), a.end(), 1) == a.end();
  const bool b_empty = std::find(b.begin(), b.end(), 1) == b.end();
  if (a_empty && b_empty) return 0.0;
  if (a_empty || b_empty) return std::numeric_limits<double>::infinity();

  // Largest distance from a point of `from` (scale 1/tf) to the nearest
  // point of `to` (scale 1/tt), in scaled units.
  auto directed = [&](const std::vector<std::uint8_t>& from, double tf, const std::vector<std::uint8_t>& to,
                      double tt) {
    const double k = tt / tf;
    double worst = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i) {
      if (!from[i]) continue;
      const double cx = static_cast<double>(i % w) * k, cy = static_cast<double>(i / w) * k;
      const int rx = static_cast<int>(std::lround(cx)), ry = static_cast<int>(std::lround(cy));
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0;; ++r) {
        if (r - 0.75 > best) break;
        if (r > width + height + 2) break;
        for (int dy = -r; dy <= r; ++dy) {
          const int y = ry + dy;
          if (y < 0 || y >= height) continue;
          const int step = (dy == -r || dy == r) ? 1 : 2 * r;
          for (int dx = -r; dx <= r; dx += std::max(step, 1)) {
            const int x = rx + dx;
            if (x < 0 || x >= width || !to[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)]) continue;
            best = std::min(best, std::hypot(x - cx, y - cy));
          }
        }
      }
      worst = std::max(worst, best / tt);
    }
    return worst;
  };
  return std::max(directed(a, ta, b, tb), directed(b, tb, a, ta));
}

ShapeSeries influence_region(const ExperimentPlan& plan, ShapeOptions opts) {
  plan.validate();
  if (!(plan.window.origin() == Site{0, 0})) {
    throw std::invalid_argument("influence_region: the window is the quadrant and must start at (0,0)");
  }
  ShapeSeries out;
  out.quadrant = plan.window;
  const int w = plan.window.width(), h = plan.window.height();
  const int m = static_cast<int>(std::ceil(opts.margin_fraction * std::max(w, h)));
  out.padded = Region({-m, -m}, w + m, h + m);

  ExperimentPlan pp = plan;
  pp.initial = InitialKind::QuadrantZero;
  GraphicalEngine eng(replica_initial(pp, 0, out.padded), plan.p,
                      EventSeed{replica_seed(plan, 0), StreamDomain::Dynamics});
  bool hit_edge = false;
  eng.set_observer([&](const ResetLogEntry& e) {
    if (e.old_spin != e.new_spin && e.site.x >= 0 && e.site.y >= 0 && (e.site.x == w - 1 || e.site.y == h - 1)) {
      hit_edge = true;
    }
  });

  std::vector<std::uint8_t> prev(plan.window.size(), 0);
  const auto& st = eng.state();
  for (const double t : plan.sample_times) {
    while (!hit_edge && eng.next_event_time() <= t) eng.step();
    if (hit_edge) {
      out.exhausted = true;
      out.exhausted_at = st.clock;
      out.diagnostic = "influenced region reached the quadrant's north or east edge at t=" +
                       std::to_string(st.clock) + "; later snapshots dropped";
      break;
    }
    eng.run_until(t);
    ShapeSnapshot snap;
    snap.t = t;
    snap.influenced.assign(plan.window.size(), 0);
    if (opts.keep_spins) snap.spins.assign(plan.window.size(), 0);
    for (std::size_t i = 0; i < plan.window.size(); ++i) {
      const std::size_t j = out.padded.index_of(plan.window.site_at(i));
      snap.influenced[i] = st.flipped_once[j];
      if (opts.keep_spins) snap.spins[i] = st.config[j];
      if (prev[i] && !snap.influenced[i]) out.monotone = false;
    }
    snap.queried = query_region(snap.influenced, w, h);
    snap.influenced_count = static_cast<std::size_t>(std::count(snap.influenced.begin(), snap.influenced.end(), 1));
    snap.queried_count = static_cast<std::size_t>(std::count(snap.queried.begin(), snap.queried.end(), 1));
    prev = snap.influenced;
    out.snapshots.push_back(std::move(snap));
  }
  for (std::size_t i = 1; i < out.snapshots.size(); ++i) {
    const ShapeSnapshot& a = out.snapshots[i - 1];
    const ShapeSnapshot& b = out.snapshots[i];
    out.hausdorff.push_back(a.t > 0.0 ? scaled_hausdorff(a.influenced, a.t, b.influenced, b.t, w, h)
                                      : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

Graymap shape_graymap(const ShapeSeries& s, const ShapeSnapshot& snap) {
  Graymap g;
  g.width = s.quadrant.width();
  g.height = s.quadrant.height();
  g.comment = "influence t=" + std::to_string(snap.t);
  g.pixels.resize(s.quadrant.size());
  const auto w = static_cast<std::size_t>(g.width);
  for (std::size_t i = 0; i < s.quadrant.size(); ++i) {
    const std::size_t x = i % w, y = i / w;
    g.pixels[(static_cast<std::size_t>(g.height) - 1 - y) * w + x] =
        snap.influenced[i] ? 255 : snap.queried[i] ? 128 : 0;
  }
  return g;
}

}  // namespace ne
