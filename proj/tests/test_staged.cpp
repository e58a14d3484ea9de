#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nhreduce/staged.hpp"

using namespace nhreduce;

namespace {

std::mt19937 rng(2024);

double uniform(double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return u(rng);
}

VectorXd rand_vec(int n, double scale = 1.0) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(-scale, scale);
  return v;
}

/// Random compatible full-system quad with the variation basis at the
/// middle point.
struct FullQuad {
  PathPair p0, p1;
};

FullQuad random_full_quad() {
  FullQuad q;
  q.p0.eps = rand_vec(3);
  q.p0.m_next = rand_vec(3);
  q.p1.eps = q.p0.m_next;
  q.p1.m_next = rand_vec(3);
  return q;
}

double snap(double x) { return std::ldexp(std::round(std::ldexp(x, 26)), -26); }

}  // namespace

TEST_CASE("full particle system basics") {
  const DldpsSystem sys = build_particle_full(0.1);

  SUBCASE("dimensions are well posed") {
    CHECK(sys.var_dim == 2);
    CHECK(sys.kin_dim == 1);
    CHECK_NOTHROW(sys.validate());
  }

  SUBCASE("y-axis motion is a trajectory") {
    DiscretePath path;
    for (int k = 0; k < 6; ++k) {
      PathPair p;
      p.eps = rand_vec(3);
      p.eps[0] = 0.4;
      p.eps[2] = -0.7;
      p.eps[1] = 0.25 * k;
      p.m_next = p.eps;
      p.m_next[1] = 0.25 * (k + 1);
      path.pairs.push_back(p);
    }
    const TrajectoryReport rep = verify_trajectory(sys, path, 1e-14);
    CHECK(rep.pass);
    CHECK(rep.max_dynamic == 0.0);
  }

  SUBCASE("invalid time step is rejected") {
    CHECK_THROWS_AS(build_particle_full(0.0), Error);
  }

  SUBCASE("translation invariance of the residuals, snapped inputs") {
    // On mantissa-limited coordinates with dyadic shifts the additions are
    // exact, so the residuals agree bitwise.
    const AbelianConnection g_action = abelian_translation_connection(3, {0, 2});
    VectorXd shift(2);
    shift << 0.25, -1.375;
    for (int i = 0; i < 100; ++i) {
      FullQuad q = random_full_quad();
      for (auto* p : {&q.p0, &q.p1}) {
        for (int c = 0; c < 3; ++c) {
          p->eps[c] = snap(p->eps[c]);
          p->m_next[c] = snap(p->m_next[c]);
        }
      }
      const FullQuad moved{{g_action.act(shift, q.p0.eps), g_action.act(shift, q.p0.m_next)},
                           {g_action.act(shift, q.p1.eps), g_action.act(shift, q.p1.m_next)}};
      const VectorXd r = residual_vector(sys, q.p0, q.p1);
      const VectorXd rm = residual_vector(sys, moved.p0, moved.p1);
      CHECK((r - rm).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("H-reduced closed forms") {
  const double h_step = 0.1;
  const DldpsSystem sys = build_particle_reduced(ParticleStage::H, h_step);
  const ReductionMap uh = upsilon_staged(ParticleStage::H);

  SUBCASE("reduced Lagrangian matches the quotient formula") {
    for (int i = 0; i < 50; ++i) {
      const FullQuad q = random_full_quad();
      const PathPair r = uh.forward(q.p0);
      const DldpsSystem full = build_particle_full(h_step);
      CHECK(sys.lagrangian(r.eps, r.m_next) ==
            doctest::Approx(full.lagrangian(q.p0.eps, q.p0.m_next)).epsilon(1e-14));
    }
  }

  SUBCASE("projection of a constrained pair satisfies the reduced constraint") {
    for (int i = 0; i < 50; ++i) {
      const PathPair full_pair =
          particle_initial(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1),
                           uniform(-0.5, 0.5), uniform(-0.5, 0.5));
      const PathPair red = uh.forward(full_pair);
      CHECK(std::abs(sys.kin_residual(red.eps, red.m_next)[0]) < 1e-15);
    }
  }

  SUBCASE("chaining map output lies in the vertical bundle") {
    const FullQuad q = random_full_quad();
    const PathPair r0 = uh.forward(q.p0), r1 = uh.forward(q.p1);
    const auto basis = sys.var_basis(r1.eps, r1.m_next);
    for (const VectorXd& d : basis) {
      const VectorXd out = sys.chain_map(r0, r1, d);
      CHECK(sys.bundle.phi_diff(r0.eps, out).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("chaining maps of all reduced stages land in the vertical bundle") {
  const ReductionMap uh = upsilon_staged(ParticleStage::H);
  const ReductionMap ug = upsilon_staged(ParticleStage::G);
  const ReductionMap ugh = upsilon_staged(ParticleStage::GH);
  const DldpsSystem sys_g = build_particle_reduced(ParticleStage::G, 0.1);
  const DldpsSystem sys_gh = build_particle_reduced(ParticleStage::GH, 0.1);

  for (int i = 0; i < 50; ++i) {
    const FullQuad q = random_full_quad();
    const PathPair g0 = ug.forward(q.p0), g1 = ug.forward(q.p1);
    for (const VectorXd& d : sys_g.var_basis(g1.eps, g1.m_next))
      CHECK(sys_g.bundle.phi_diff(g0.eps, sys_g.chain_map(g0, g1, d))
                .cwiseAbs()
                .maxCoeff() == 0.0);
    const PathPair gh0 = ugh.forward(uh.forward(q.p0));
    const PathPair gh1 = ugh.forward(uh.forward(q.p1));
    for (const VectorXd& d : sys_gh.var_basis(gh1.eps, gh1.m_next))
      CHECK(sys_gh.bundle.phi_diff(gh0.eps, sys_gh.chain_map(gh0, gh1, d))
                .cwiseAbs()
                .maxCoeff() == 0.0);
  }
}

TEST_CASE("reduced residual pulls back to the full residual") {
  // nu-check of the derived closed forms for all three stages, 500 samples.
  const double h_step = 0.05;
  const DldpsSystem full = build_particle_full(h_step);
  const DldpsSystem sys_h = build_particle_reduced(ParticleStage::H, h_step);
  const DldpsSystem sys_g = build_particle_reduced(ParticleStage::G, h_step);
  const DldpsSystem sys_gh = build_particle_reduced(ParticleStage::GH, h_step);
  const ReductionMap uh = upsilon_staged(ParticleStage::H);
  const ReductionMap ug = upsilon_staged(ParticleStage::G);
  const ReductionMap ugh = upsilon_staged(ParticleStage::GH);

  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const FullQuad q = random_full_quad();
    const auto basis = full.var_basis(q.p1.eps, q.p1.m_next);
    for (const VectorXd& d : basis) {
      const double nu = eval_nu_d(full, q.p0, q.p1, d);
      const TangentPair t{d, VectorXd::Zero(3)};

      const PathPair h0 = uh.forward(q.p0), h1 = uh.forward(q.p1);
      const TangentPair th = uh.fwd_diff(q.p1, t);
      worst = std::max(worst, std::abs(nu - eval_nu_d(sys_h, h0, h1, th.eps)));

      const PathPair g0 = ug.forward(q.p0), g1 = ug.forward(q.p1);
      const TangentPair tg = ug.fwd_diff(q.p1, t);
      worst = std::max(worst, std::abs(nu - eval_nu_d(sys_g, g0, g1, tg.eps)));

      const PathPair gh0 = ugh.forward(h0), gh1 = ugh.forward(h1);
      const TangentPair tgh = ugh.fwd_diff(h1, th);
      worst = std::max(worst, std::abs(nu - eval_nu_d(sys_gh, gh0, gh1, tgh.eps)));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("reduced systems integrate and verify") {
  const double h_step = 0.1;
  for (ParticleStage stage : {ParticleStage::H, ParticleStage::G, ParticleStage::GH}) {
    const DldpsSystem sys = build_particle_reduced(stage, h_step);
    PathPair initial = upsilon_staged(ParticleStage::H).forward(
        particle_initial(0.0, 1.0, 0.0, 0.1, 0.05));
    if (stage == ParticleStage::G)
      initial = upsilon_staged(ParticleStage::G).forward(
          particle_initial(0.0, 1.0, 0.0, 0.1, 0.05));
    if (stage == ParticleStage::GH)
      initial = upsilon_staged(ParticleStage::GH).forward(initial);
    NewtonOptions opt;
    opt.tol = 1e-13;
    const DiscretePath path = integrate(sys, initial, 40, opt);
    CHECK(verify_trajectory(sys, path, 1e-10).pass);
  }
}

TEST_CASE("staged equivalence") {
  SUBCASE("straight-line motion passes trivially") {
    const StagedEquivalenceReport rep =
        staged_equivalence_test(0.1, particle_initial(0, 1, 0, 0.0, 0.25), 20);
    CHECK(rep.pass);
    CHECK(rep.max_full == 0.0);
  }

  SUBCASE("generic initial data passes at 1e-9") {
    const StagedEquivalenceReport rep =
        staged_equivalence_test(0.1, particle_initial(0, 1, 0, 0.1, 0.05), 100);
    CHECK(rep.pass);
    CHECK(rep.max_f_mismatch == 0.0);
    CHECK(rep.max_conn_condition == 0.0);
  }

  SUBCASE("a corrupted stage fails alone") {
    const double h_step = 0.1;
    const DiscretePath full = integrate(build_particle_full(h_step),
                                        particle_initial(0, 1, 0, 0.1, 0.05), 30);
    DiscretePath h_path, g_path;
    for (const PathPair& p : full.pairs) {
      h_path.pairs.push_back(upsilon_staged(ParticleStage::H).forward(p));
      g_path.pairs.push_back(upsilon_staged(ParticleStage::G).forward(p));
    }
    h_path.pairs[12].eps[2] += 1e-3;
    CHECK_FALSE(
        verify_trajectory(build_particle_reduced(ParticleStage::H, h_step), h_path, 1e-9)
            .pass);
    CHECK(verify_trajectory(build_particle_reduced(ParticleStage::G, h_step), g_path, 1e-9)
              .pass);
  }
}

TEST_CASE("residual invariance under the residual symmetry") {
  // Translating the H-reduced path in x changes no residual beyond 1e-12.
  const double h_step = 0.1;
  const DldpsSystem sys = build_particle_reduced(ParticleStage::H, h_step);
  const DiscretePath full = integrate(build_particle_full(h_step),
                                      particle_initial(0, 1, 0, 0.1, 0.05), 30);
  DiscretePath h_path;
  for (const PathPair& p : full.pairs)
    h_path.pairs.push_back(upsilon_staged(ParticleStage::H).forward(p));

  const double shift = uniform(-3, 3);
  DiscretePath moved = h_path;
  for (PathPair& p : moved.pairs) {
    p.eps[0] += shift;
    p.m_next[0] += shift;
  }
  for (int k = 1; k < h_path.size(); ++k) {
    const VectorXd r = residual_vector(sys, h_path.pairs[static_cast<size_t>(k - 1)],
                                       h_path.pairs[static_cast<size_t>(k)]);
    const VectorXd rm = residual_vector(sys, moved.pairs[static_cast<size_t>(k - 1)],
                                        moved.pairs[static_cast<size_t>(k)]);
    CHECK((r - rm).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("two-route reconstruction reproduces the full trajectory") {
  const double h_step = 0.1;
  const DiscretePath full = integrate(build_particle_full(h_step),
                                      particle_initial(0, 1, 0, 0.1, 0.05), 50);
  const ReductionMap uh = upsilon_staged(ParticleStage::H);
  const ReductionMap ugh = upsilon_staged(ParticleStage::GH);

  DiscretePath h_path, gh_path;
  for (const PathPair& p : full.pairs) {
    h_path.pairs.push_back(uh.forward(p));
    gh_path.pairs.push_back(ugh.forward(h_path.pairs.back()));
  }

  const DiscretePath h_back = ugh.lift(h_path.pairs[0].eps, gh_path);
  const DiscretePath full_back = uh.lift(full.pairs[0].eps, h_back);
  for (int k = 0; k < full.size(); ++k) {
    CHECK((full_back.pairs[static_cast<size_t>(k)].eps -
           full.pairs[static_cast<size_t>(k)].eps)
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    CHECK((full_back.pairs[static_cast<size_t>(k)].m_next -
           full.pairs[static_cast<size_t>(k)].m_next)
              .cwiseAbs()
              .maxCoeff() < 1e-9);
  }
}
