#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "dynamics.hpp"
#include "graph.hpp"
#include "rng.hpp"

using namespace depolar;

namespace {

Network dyad() { return Network::build(2, {{0, 1, 1.0}}).with_internal({1.0, -1.0}); }

Network path3() {
  return Network::build(3, {{0, 1, 1.0}, {1, 2, 1.0}}).with_internal({1.0, 0.0, -1.0});
}

Network random_opinion_graph(Rng& rng, NodeId n, double edge_prob) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (rng.uniform01() < edge_prob) edges.push_back({u, v, 0.5 + rng.uniform01()});
    }
  }
  std::vector<double> s(static_cast<std::size_t>(n));
  for (auto& v : s) v = rng.uniform(-1.0, 1.0);
  return Network::build(n, std::move(edges)).with_internal(std::move(s));
}

double inf_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

// Hand-solved equilibria frozen as oracles:
//   dyad s=(+1,-1):        z1=(1+z2)/2, z2=(-1+z1)/2  =>  z=(1/3, -1/3)
//   path3 s=(+1,0,-1):     antisymmetry forces z1=0   =>  z=(1/2, 0, -1/2)
//   dyad anchor {0}:       [[1,0],[-1,2]] z = (0,-1)  =>  z=(0, -1/2)
//   path3 anchor {0}:      z1=z2/3, z2=(-1+z1)/2      =>  z=(0, -1/5, -3/5)

TEST_CASE("steady_state: dyad equilibrium (1/3, -1/3)") {
  Network net = dyad();
  SolveReport r = steady_state(net, ModerationState(net));
  REQUIRE(r.z_ss.size() == 2);
  CHECK(r.z_ss[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(r.z_ss[1] == doctest::Approx(-1.0 / 3.0).epsilon(1e-9));
  CHECK(r.residual <= 1e-10);
  CHECK(r.method == SolveMethod::fixed_point);
  CHECK(r.iterations > 0);
}

TEST_CASE("steady_state: path3 equilibrium (1/2, 0, -1/2)") {
  Network net = path3();
  SolveReport r = steady_state(net, ModerationState(net));
  CHECK(r.z_ss[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.z_ss[1] == doctest::Approx(0.0));
  CHECK(std::abs(r.z_ss[1]) < 1e-10);
  CHECK(r.z_ss[2] == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("steady_state: anchored dyad (0, -1/2); anchored entries exactly zero") {
  Network net = dyad();
  ModerationState mod = ModerationState(net).anchored(0);
  SolveReport r = steady_state(net, mod);
  CHECK(r.z_ss[0] == 0.0);  // exact
  CHECK(r.z_ss[1] == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("steady_state: isolated node keeps its internal opinion") {
  Network net = Network::build(1, {}).with_internal({0.7});
  SolveReport r = steady_state(net, ModerationState(net));
  CHECK(r.z_ss[0] == doctest::Approx(0.7));
}

TEST_CASE("steady_state: satisfies the update rule at every non-anchored node") {
  Rng rng(3);
  Network net = random_opinion_graph(rng, 25, 0.2);
  ModerationState mod = ModerationState(net).anchored(3).anchored(11);
  SolveReport r = steady_state(net, mod);
  for (NodeId i = 0; i < net.node_count(); ++i) {
    if (mod.is_anchored(i)) {
      CHECK(r.z_ss[static_cast<std::size_t>(i)] == 0.0);
      continue;
    }
    double acc = net.internal()[static_cast<std::size_t>(i)];
    for (const Neighbor& nb : net.neighbors(i)) acc += nb.weight * r.z_ss[static_cast<std::size_t>(nb.id)];
    double expected = acc / (1.0 + net.weighted_degree(i));
    CHECK(std::abs(expected - r.z_ss[static_cast<std::size_t>(i)]) <= 1e-9);
  }
}

TEST_CASE("steady_state: convergence error carries best iterate") {
  Network net = dyad();
  SolverOptions opts;
  opts.max_iter = 2;  // far too few sweeps for tol 1e-10
  try {
    steady_state(net, ModerationState(net), opts);
    FAIL("expected convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.code() == ErrorCode::convergence);
    CHECK(e.iterations() == 2);
    CHECK(e.residual() > opts.tol);
    REQUIRE(e.best_iterate().size() == 2);
    // Two sweeps from zero: z = (1/2, -1/2) then (1/4, -3/4)/... best iterate finite.
    CHECK(std::abs(e.best_iterate()[0]) <= 1.0);
  }
  CHECK_THROWS_AS(steady_state(net, ModerationState(net), SolverOptions{.tol = -1.0}), Error);
  CHECK_THROWS_AS(steady_state(net, ModerationState(net), SolverOptions{.max_iter = 0}), Error);
}

TEST_CASE("steady_state: warm starts agree with cold starts (uniqueness)") {
  Rng rng(5);
  Network net = random_opinion_graph(rng, 30, 0.15);
  ModerationState mod = ModerationState(net).anchored(7);
  SolveReport cold = steady_state(net, mod);
  std::vector<double> warm_seed(30);
  for (auto& v : warm_seed) v = rng.uniform(-1.0, 1.0);
  SolveReport warm = steady_state(net, mod, {}, warm_seed);
  CHECK(inf_dist(cold.z_ss, warm.z_ss) <= 10 * 1e-10);
}

TEST_CASE("steady_state_direct: matches hand solves and serves as oracle") {
  Network net = dyad();
  ModerationState mod = ModerationState(net).anchored(0);
  SolveReport direct = steady_state_direct(net, mod);
  CHECK(direct.method == SolveMethod::direct);
  CHECK(direct.z_ss[0] == 0.0);
  CHECK(direct.z_ss[1] == doctest::Approx(-0.5));

  // All nodes anchored: z = 0 exactly.
  ModerationState all = ModerationState(net).anchored(0).anchored(1);
  SolveReport zero = steady_state_direct(net, all);
  CHECK(zero.z_ss == std::vector<double>{0.0, 0.0});

  // Cross-method oracle on random graphs with anchor sets of several sizes.
  Rng rng(9);
  for (int trial = 0; trial < 8; ++trial) {
    Network g = random_opinion_graph(rng, 20, 0.25);
    ModerationState m(g);
    const int anchors = trial % 4;
    for (int a = 0; a < anchors; ++a) {
      NodeId v;
      do {
        v = static_cast<NodeId>(rng.uniform_below(20));
      } while (m.is_anchored(v));
      m = m.anchored(v);
    }
    SolveReport fp = steady_state(g, m);
    SolveReport dr = steady_state_direct(g, m);
    CHECK(inf_dist(fp.z_ss, dr.z_ss) <= 1e-8);
  }
}

TEST_CASE("steady_state_direct: cap produces capability error") {
  std::vector<Edge> edges;
  for (NodeId i = 0; i + 1 < 12; ++i) edges.push_back({i, i + 1, 1.0});
  Network net = Network::build(12, edges);
  SolverOptions opts;
  opts.direct_cap = 10;
  try {
    steady_state_direct(net, ModerationState(net), opts);
    FAIL("expected capability error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::capability);
  }
}

TEST_CASE("polarization_index: definition and frozen values") {
  std::vector<double> zeros(5, 0.0);
  CHECK(polarization_index(zeros) == 0.0);
  std::vector<double> dyad_eq = {1.0 / 3.0, -1.0 / 3.0};
  CHECK(polarization_index(dyad_eq) == doctest::Approx(1.0 / 9.0));
  std::vector<double> path_eq = {0.5, 0.0, -0.5};
  CHECK(polarization_index(path_eq) == doctest::Approx(1.0 / 6.0));
  CHECK_THROWS_AS(polarization_index(std::vector<double>{}), Error);
}

TEST_CASE("maximum principle and pi range") {
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    Network net = random_opinion_graph(rng, 40, 0.1);
    ModerationState mod(net);
    for (int a = 0; a < trial; ++a) mod = mod.anchored(static_cast<NodeId>(a * 7 % 40));
    SolveReport r = steady_state(net, mod);
    double smax = 0.0;
    std::vector<double> eff = mod.effective_internal();
    for (double v : eff) smax = std::max(smax, std::abs(v));
    for (double v : r.z_ss) CHECK(std::abs(v) <= smax + 1e-12);
    double pi = polarization_index(r.z_ss);
    CHECK(pi >= 0.0);
    CHECK(pi <= 1.0);
  }
}

TEST_CASE("sign antisymmetry: z(-s) = -z(s)") {
  Rng rng(17);
  Network net = random_opinion_graph(rng, 20, 0.3);
  std::vector<double> neg = net.internal();
  for (auto& v : neg) v = -v;
  Network flipped = net.with_internal(neg);
  SolveReport a = steady_state(net, ModerationState(net));
  SolveReport b = steady_state(flipped, ModerationState(flipped));
  for (std::size_t i = 0; i < a.z_ss.size(); ++i) {
    CHECK(a.z_ss[i] == doctest::Approx(-b.z_ss[i]).epsilon(1e-8));
  }
  CHECK(polarization_index(a.z_ss) == doctest::Approx(polarization_index(b.z_ss)));
}

TEST_CASE("permutation equivariance of the equilibrium") {
  Rng rng(19);
  Network net = random_opinion_graph(rng, 15, 0.3);
  std::vector<NodeId> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  Network pnet = permute(net, perm);
  SolveReport base = steady_state(net, ModerationState(net));
  SolveReport permuted = steady_state(pnet, ModerationState(pnet));
  for (NodeId i = 0; i < 15; ++i) {
    CHECK(permuted.z_ss[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] ==
          doctest::Approx(base.z_ss[static_cast<std::size_t>(i)]).epsilon(1e-9));
  }
}

TEST_CASE("gain: frozen oracle values") {
  // path3 center: s_1 = 0 and z_1 = 0 already, equilibrium unchanged -> gain 0.
  Network p3 = path3();
  CHECK(gain(p3, ModerationState(p3), 1) == doctest::Approx(0.0).epsilon(1e-9));
  // path3 end: 1/6 - 2/15 = 1/30 (z_anchored = (0, -1/5, -3/5), pi = (1/25+9/25)/3).
  CHECK(gain(p3, ModerationState(p3), 0) == doctest::Approx(1.0 / 30.0).epsilon(1e-7));
  // dyad: 1/9 - 1/8 = -1/72; gains can be negative.
  Network d = dyad();
  CHECK(gain(d, ModerationState(d), 0) == doctest::Approx(-1.0 / 72.0).epsilon(1e-7));
  // Double-anchor rejected.
  ModerationState mod = ModerationState(d).anchored(0);
  CHECK_THROWS_AS(gain(d, mod, 0), Error);
}

TEST_CASE("anchor: set semantics, order independence, immutability") {
  Network net = path3();
  ModerationState mod(net);
  CHECK(mod.anchor_count() == 0);
  ModerationState one = anchor(mod, 2);
  CHECK(one.anchor_count() == 1);
  CHECK(one.is_anchored(2));
  CHECK(!mod.is_anchored(2));  // original untouched
  CHECK_THROWS_AS(anchor(one, 2), Error);
  CHECK_THROWS_AS(anchor(one, 99), Error);

  // Order independence of the indicator.
  ModerationState ab = anchor(anchor(mod, 0), 2);
  ModerationState ba = anchor(anchor(mod, 2), 0);
  CHECK(ab.indicator() == ba.indicator());
  SolveReport za = steady_state(net, ab);
  SolveReport zb = steady_state(net, ba);
  CHECK(inf_dist(za.z_ss, zb.z_ss) == 0.0);

  // effective_internal zeroes anchored entries.
  std::vector<double> eff = ab.effective_internal();
  CHECK(eff == std::vector<double>{0.0, 0.0, 0.0});
  ModerationState just2 = anchor(mod, 2);
  CHECK(just2.effective_internal() == std::vector<double>{1.0, 0.0, 0.0});
  std::vector<double> z = {0.5, 0.25, -0.5};
  CHECK(just2.effective_expressed(z) == std::vector<double>{0.5, 0.25, 0.0});
}

TEST_CASE("fixed-point context: extra anchor matches full anchored solve") {
  Rng rng(23);
  Network net = random_opinion_graph(rng, 18, 0.25);
  ModerationState mod = ModerationState(net).anchored(4);
  FixedPointContext ctx(net, SolverOptions{});
  FixedPointContext::Workspace ws;
  std::span<const double> with_extra = ctx.solve(mod, 9, {}, ws);
  std::vector<double> got(with_extra.begin(), with_extra.end());
  SolveReport want = steady_state(net, mod.anchored(9));
  CHECK(inf_dist(got, want.z_ss) <= 2e-10);
}
