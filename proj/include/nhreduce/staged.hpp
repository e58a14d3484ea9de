#pragma once

// Two-stage reduction test system: nonholonomic particle on R^3 with
// G = R^2 acting by (x, z)-translations and H the z-translations. Concrete
// coordinate models for the one-stage and two-stage reduced systems and the
// isomorphism F between them.
//
// Coordinates: full (x, y, z); H-reduced ((x0, y0, w), (x1, y1)) with
// w = z1 - z0; G-reduced ((y0, u, w), y1) with u = x1 - x0; (G/H)-reduced
// ((y0, w, u), y1).

#include "nhreduce/connections.hpp"
#include "nhreduce/dldps.hpp"

namespace nhreduce {

enum class ParticleStage { H, G, GH };

/// Full system: Q = R^3, L_d(q0,q1) = |q1-q0|^2/(2 h_step), constraint
/// distribution span{(1,0,y),(0,1,0)}, discrete constraint
/// z1 - z0 - (y0+y1)(x1-x0)/2 = 0, P = 0.
DldpsSystem build_particle_full(double h_step);

/// Closed-form reduced system for the given stage.
DldpsSystem build_particle_reduced(ParticleStage stage, double h_step);

/// Reduction map for the given stage in the concrete coordinates. The lift
/// seed is a total-space point of the stage's source system (full for H and
/// G, H-level for GH) providing the fiber coordinates of the start.
ReductionMap upsilon_staged(ParticleStage stage);

/// The isomorphism F: C'(GH-reduced) -> C'(G-reduced); in these coordinates
/// the permutation ((y0, w, u), y1) -> ((y0, u, w), y1).
PathPair staged_f_map(const PathPair& gh_pair);
PathPair staged_f_inv(const PathPair& g_pair);

/// Constrained initial pair from a start point and (dx, dy) offsets; the z
/// offset is chosen to satisfy the discrete constraint exactly.
PathPair particle_initial(double x0, double y0, double z0, double dx, double dy);

struct StagedEquivalenceReport {
  double max_full = 0.0, max_h = 0.0, max_g = 0.0, max_gh = 0.0;
  double max_f_mismatch = 0.0;       // |F(Y_GH о Y_H) - Y_G| over the path
  double max_conn_condition = 0.0;   // G-conjugation defect of A^H
  bool pass = false;
  std::string first_failure;
};

/// Integrates the full system, projects to the H-, G-, and (G/H)-level
/// paths, verifies all four trajectories, and checks the F correspondence
/// and the G-invariance condition on the stage-one connection.
StagedEquivalenceReport staged_equivalence_test(double h_step, const PathPair& initial,
                                                int steps, double tol = 1e-9);

}  // namespace nhreduce
