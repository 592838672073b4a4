// Numerical audits of the well-posedness estimates: constants, growth bounds,
// Lipschitz amplification and the Gateaux convergence study.
#pragma once

#include "nlflow/tangent.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nlflow {

/// W_N = int_0^{pi/2} cos^N, by the recurrence W_N = (N-1)/N W_{N-2}.
double wallis(int N);

struct KappaConstants {
    double kappa = 0.0;  ///< 2 N |grad w|
    double kappa0 = 0.0; ///< N W_N (2N+1) |grad w|
};

KappaConstants kappa_constants(double grad_w_inf, int N);

struct BoundEntry {
    std::string name;
    double theoretical = 0.0;
    double measured = 0.0;
    double slack = 0.0;
    bool satisfied = false;
    double margin = 0.0; ///< theoretical (1 + slack) - measured
    std::string note;
};

struct BoundsReport {
    std::vector<BoundEntry> entries;
    std::string provenance;
    std::vector<std::string> warnings;

    void add(const std::string& name, double theoretical, double measured, double slack,
             const std::string& note = "");
    bool all_satisfied() const;
    const BoundEntry* find(const std::string& name) const;
    std::string to_json() const;
    std::string table() const;
};

inline constexpr double kExactSlack = 1e-6;
inline constexpr double kMeasuredSlack = 0.05;

struct AuditOptions {
    std::uint64_t seed = 1;
    double perturbation = 0.05; ///< relative size of the Lipschitz / tangent perturbation
    bool lipschitz = true;
    bool tangent = true;
    double cfl = 0.45;          ///< step rule for the perturbed Lipschitz run
    std::string provenance;
};

BoundsReport audit_run(const Trajectory& base, const VelocityModel& model, const AuditOptions& opt = {});

/// exp(t C(beta) (2N + TV_max + N beta)).
double lipschitz_envelope(const VelocityModel& model, int N, double beta, double tv_max, double t);

/// |S_t rho1 - S_t rho2|_1 / |rho1 - rho2|_1 (1 when the data coincide).
double lipschitz_study(const Field& rho1, const Field& rho2, const VelocityModel& model, double t,
                       const SolverConfig& cfg);

struct GateauxRow {
    double h = 0.0;
    double l1_error = 0.0;
    double observed_order = 0.0; ///< log ratio against the previous row (0 for the first)
};

struct GateauxStudy {
    std::vector<GateauxRow> rows;
    double slope = 0.0; ///< least-squares slope of log error against log h
};

/// Finite-difference quotients on the base step schedule against the tangent solution.
GateauxStudy gateaux_study(const Field& rho_o, const Field& r_o, const VelocityModel& model,
                           const SolverConfig& cfg, const std::vector<double>& h_ladder);

/// Least-squares slope of log(y) against log(x) over entries with y > 0.
double fitted_order(const std::vector<double>& x, const std::vector<double>& y);

} // namespace nlflow
