#include "northeast/measures.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "northeast/counter_rng.hpp"
#include "northeast/event_fabric.hpp"
#include "northeast/simd/kernels.hpp"

namespace ne {

namespace {

std::int32_t mod(std::int32_t v, std::int32_t m) { return ((v % m) + m) % m; }

}  // namespace

Configuration sample_bernoulli(const Region& region, double p, std::uint64_t seed, BoundaryRule boundary) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_bernoulli: p must lie in [0,1]");
  Configuration c(region, boundary);
  const auto key = rng::key_from_seed(seed);
  simd::BernoulliRowArgs args{key.k0, key.k1, stream_tag(StreamDomain::Initial, 0), region.origin().x, 0,
                              rng::bernoulli_threshold(p)};
  auto spins = c.spins();
  const auto w = static_cast<std::size_t>(region.width());
  const auto& k = simd::kernels();
  for (int row = 0; row < region.height(); ++row) {
    args.y = region.origin().y + row;
    k.bernoulli_row(args, w, spins.data() + static_cast<std::size_t>(row) * w);
  }
  return c;
}

GammaSet GammaSet::grid(int m, Site offset) {
  if (m < 2) throw std::invalid_argument("grid modulus must be >= 2");
  GammaSet g;
  g.kind_ = Kind::Grid;
  g.m_ = m;
  g.offset_ = {mod(offset.x, m), mod(offset.y, m)};
  return g;
}

GammaSet GammaSet::explicit_sites(const std::vector<Site>& sites) {
  GammaSet g;
  g.kind_ = Kind::Explicit;
  g.m_ = 0;
  g.sites_.insert(sites.begin(), sites.end());
  return g;
}

bool GammaSet::contains(Site s) const {
  if (kind_ == Kind::Grid) return mod(s.x - offset_.x, m_) == 0 || mod(s.y - offset_.y, m_) == 0;
  return sites_.count(s) != 0;
}

bool GammaSet::is_collar(Site s) const {
  return !contains(s) && (contains(south_of(s)) || contains(west_of(s)));
}

std::string GammaSet::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::Grid) {
    os << "grid m=" << m_ << " offset=" << offset_.x << "," << offset_.y;
  } else {
    os << "explicit n=" << sites_.size();
  }
  return os.str();
}

GammaSet build_gamma_grid(int m, Site offset, const Region& window) {
  (void)window;  // grid sets are global; the window only matters for validation
  if (m < 2) throw std::invalid_argument("build_gamma_grid: m must be >= 2 (complement would be empty)");
  if (offset.x < 0 || offset.y < 0 || offset.x >= m || offset.y >= m) {
    throw std::invalid_argument("build_gamma_grid: offset coordinates must lie in [0, m)");
  }
  return GammaSet::grid(m, offset);
}

GammaReport validate_gamma(const GammaSet& g, const Region& window) {
  GammaReport rep;
  for (const Site s : window.sites()) {
    if (g.contains(s) && !g.contains(south_of(s)) && !g.contains(west_of(s))) {
      rep.condition_a = false;
      rep.violations_a.push_back(s);
    }
  }

  // Flood fill of the complement inside the window (4-connectivity).
  std::vector<std::uint8_t> seen(window.size(), 0);
  const int m = g.modulus();
  bool grid_shape_ok = true;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const Site start = window.site_at(i);
    if (seen[i] || g.contains(start)) continue;
    ++rep.complement_components;
    std::deque<Site> queue{start};
    seen[i] = 1;
    std::size_t size = 0;
    bool touches_edge = false;
    Site lo = start, hi = start;
    while (!queue.empty()) {
      const Site s = queue.front();
      queue.pop_front();
      ++size;
      lo = {std::min(lo.x, s.x), std::min(lo.y, s.y)};
      hi = {std::max(hi.x, s.x), std::max(hi.y, s.y)};
      for (const Site n : {south_of(s), west_of(s), north_of(s), east_of(s)}) {
        if (!window.contains(n)) {
          if (!g.contains(n)) touches_edge = true;
          continue;
        }
        const std::size_t j = window.index_of(n);
        if (seen[j] || g.contains(n)) continue;
        seen[j] = 1;
        queue.push_back(n);
      }
    }
    if (touches_edge) ++rep.edge_components;
    if (g.kind() == GammaSet::Kind::Grid) {
      const auto side = static_cast<std::size_t>(m - 1);
      const bool box = size == static_cast<std::size_t>(hi.x - lo.x + 1) * static_cast<std::size_t>(hi.y - lo.y + 1);
      if (touches_edge ? (size > side * side || !box) : (size != side * side || !box)) grid_shape_ok = false;
    }
  }
  if (g.kind() == GammaSet::Kind::Grid) {
    rep.condition_b = grid_shape_ok;
    rep.notes.push_back("condition (b) checked structurally: every complement component is an (m-1)x(m-1) box");
  } else {
    rep.notes.push_back(
        "condition (b) concerns the infinite lattice and holds trivially in a finite window; "
        "components cut by the window edge are counted but not judged");
  }
  return rep;
}

Configuration lambda_gamma_initial(const GammaSet& g, const Region& window) {
  Configuration c(window, BoundaryRule::GhostZeros);
  auto spins = c.spins();
  for (std::size_t i = 0; i < window.size(); ++i) spins[i] = g.contains(window.site_at(i)) ? 0 : 1;
  return c;
}

MixtureSample sample_mixture_mu(int m, double p, const Region& window, std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("sample_mixture_mu: m must be >= 2");
  const auto key = rng::key_from_seed(seed);
  const std::uint64_t w =
      rng::philox_u64({0, 0, 0, stream_tag(StreamDomain::Mixture, 0)}, key);
  const auto cells = static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(m);
  const auto pick = static_cast<std::uint64_t>((static_cast<unsigned __int128>(w) * cells) >> 64);
  const Site offset{static_cast<std::int32_t>(pick % static_cast<std::uint64_t>(m)),
                    static_cast<std::int32_t>(pick / static_cast<std::uint64_t>(m))};
  const GammaSet g = GammaSet::grid(m, offset);
  Configuration c(window, BoundaryRule::GhostZeros);
  const std::uint64_t thr = rng::bernoulli_threshold(p);
  const std::uint32_t tag = stream_tag(StreamDomain::Mixture, 1);
  auto spins = c.spins();
  for (std::size_t i = 0; i < window.size(); ++i) {
    const Site s = window.site_at(i);
    if (g.contains(s)) {
      spins[i] = 0;
    } else if (g.is_collar(s)) {
      spins[i] = 1;
    } else {
      const rng::Counter ctr{static_cast<std::uint32_t>(s.x), static_cast<std::uint32_t>(s.y), 0, tag};
      spins[i] = (rng::philox_u64(ctr, key) >> 11) < thr ? 1 : 0;
    }
  }
  return {std::move(c), offset};
}

// ---------------------------------------------------------------------------

ExactChain make_exact_chain(const Region& region, BoundaryRule boundary, double p) {
  if (region.size() > 16) throw std::invalid_argument("exact chain limited to 16 sites");
  if (boundary == BoundaryRule::HalfPlaneExperiment) throw std::invalid_argument("exact chain needs a closed boundary");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0,1)");
  return ExactChain{region, boundary, p};
}

double ExactChain::flip_rate(std::uint32_t state, std::size_t i) const {
  const Site s = region.site_at(i);
  auto spin = [&](Site n) -> int {
    if (region.contains(n)) return (state >> region.index_of(n)) & 1u;
    switch (boundary) {
      case BoundaryRule::GhostOnes: return 1;
      case BoundaryRule::GhostZeros: return 0;
      default: {
        const Site o = region.origin();
        const Site w{o.x + mod(n.x - o.x, region.width()), o.y + mod(n.y - o.y, region.height())};
        return (state >> region.index_of(w)) & 1u;
      }
    }
  };
  if (!(spin(south_of(s)) && spin(west_of(s)))) return 0.0;
  return ((state >> i) & 1u) ? 1.0 - p : p;
}

double spectral_gap(const ExactChain& chain) {
  if (chain.boundary != BoundaryRule::GhostOnes) throw std::invalid_argument("spectral_gap: ghost-ones chains only");
  if (chain.region.size() > 10) throw std::invalid_argument("spectral_gap: at most 10 sites");
  const auto n = static_cast<Eigen::Index>(chain.state_count());
  const Eigen::VectorXd nu = product_measure(chain.region.size(), chain.p);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    for (std::size_t i = 0; i < chain.region.size(); ++i) {
      const double r = chain.flip_rate(static_cast<std::uint32_t>(x), i);
      const Eigen::Index y = x ^ (Eigen::Index{1} << i);
      s(x, y) = std::sqrt(nu[x] / nu[y]) * r;
      s(x, x) -= r;
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
  return -es.eigenvalues()[n - 2];
}

Eigen::VectorXd product_measure(std::size_t sites, double p) {
  const std::size_t n = std::size_t{1} << sites;
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    const int ones = std::popcount(static_cast<std::uint32_t>(s));
    v[static_cast<Eigen::Index>(s)] =
        std::pow(p, ones) * std::pow(1.0 - p, static_cast<double>(sites) - ones);
  }
  return v;
}

namespace {

// Tarjan's strongly connected components, iterative.
std::vector<std::vector<std::uint32_t>> strongly_connected(const std::vector<std::vector<std::uint32_t>>& adj) {
  const auto n = static_cast<std::uint32_t>(adj.size());
  constexpr std::uint32_t kUnset = 0xFFFFFFFFu;
  std::vector<std::uint32_t> index(n, kUnset), low(n, 0);
  std::vector<std::uint8_t> on_stack(n, 0);
  std::vector<std::uint32_t> stack;
  std::vector<std::vector<std::uint32_t>> out;
  std::uint32_t counter = 0;
  struct Frame {
    std::uint32_t v;
    std::size_t next;
  };
  std::vector<Frame> call;
  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.next < adj[f.v].size()) {
        const std::uint32_t w = adj[f.v][f.next++];
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const std::uint32_t v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        std::vector<std::uint32_t> comp;
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
    }
  }
  return out;
}

}  // namespace

StationaryResult exact_stationary(const ExactChain& chain) {
  const std::size_t sites = chain.region.size();
  const auto n = static_cast<std::uint32_t>(chain.state_count());
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < sites; ++i) {
      if (chain.flip_rate(s, i) > 0.0) adj[s].push_back(s ^ (1u << i));
    }
  }

  StationaryResult res;
  const Eigen::VectorXd nu = product_measure(sites, chain.p);
  for (std::uint32_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < sites; ++i) {
      const std::uint32_t t = s ^ (1u << i);
      const double r = std::abs(nu[s] * chain.flip_rate(s, i) - nu[t] * chain.flip_rate(t, i));
      res.balance_residual = std::max(res.balance_residual, r);
    }
  }

  const auto sccs = strongly_connected(adj);
  std::vector<std::uint32_t> comp_of(n);
  for (std::uint32_t c = 0; c < sccs.size(); ++c) {
    for (auto v : sccs[c]) comp_of[v] = c;
  }
  for (std::uint32_t c = 0; c < sccs.size(); ++c) {
    bool closed = true;
    for (auto v : sccs[c]) {
      for (auto w : adj[v]) closed = closed && comp_of[w] == c;
    }
    if (closed) res.closed_classes.push_back(sccs[c]);
  }
  std::sort(res.closed_classes.begin(), res.closed_classes.end());
  if (res.closed_classes.size() != 1) return res;

  // Solve on the closed class: Q^T pi = 0 with the last equation replaced by
  // the normalisation.
  const auto& cls = res.closed_classes.front();
  const auto m = static_cast<Eigen::Index>(cls.size());
  std::vector<std::int64_t> local(n, -1);
  for (Eigen::Index k = 0; k < m; ++k) local[cls[static_cast<std::size_t>(k)]] = k;
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index k = 0; k < m; ++k) {
    const std::uint32_t s = cls[static_cast<std::size_t>(k)];
    double out_rate = 0.0;
    for (std::size_t i = 0; i < sites; ++i) {
      const double r = chain.flip_rate(s, i);
      if (r == 0.0) continue;
      out_rate += r;
      const Eigen::Index to = local[s ^ (1u << i)];
      if (to != m - 1) trip.emplace_back(to, k, r);  // (Q^T)[to][from]
    }
    if (k != m - 1) trip.emplace_back(k, k, -out_rate);
    trip.emplace_back(m - 1, k, 1.0);
  }
  Eigen::SparseMatrix<double> a(m, m);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw std::runtime_error("exact_stationary: factorisation failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs[m - 1] = 1.0;
  const Eigen::VectorXd x = lu.solve(rhs);

  res.unique = true;
  res.pi = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < m; ++k) res.pi[cls[static_cast<std::size_t>(k)]] = x[k];
  for (std::uint32_t y = 0; y < n; ++y) {
    double flow = 0.0;
    for (std::size_t i = 0; i < sites; ++i) {
      const std::uint32_t s = y ^ (1u << i);
      flow += res.pi[s] * chain.flip_rate(s, i) - res.pi[y] * chain.flip_rate(y, i);
    }
    res.generator_residual = std::max(res.generator_residual, std::abs(flow));
  }
  return res;
}

void write_stationary_csv(std::ostream& out, const Eigen::VectorXd& pi) {
  out << "state,probability\n";
  out << std::setprecision(17);
  for (Eigen::Index s = 0; s < pi.size(); ++s) out << s << "," << pi[s] << "\n";
}

}  // namespace ne
