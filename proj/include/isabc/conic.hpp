#pragma once

#include "isabc/numerics.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace isabc {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalBreakdown : SolverError {
    using SolverError::SolverError;
};
struct InvalidAnchor : SolverError {
    using SolverError::SolverError;
};

enum class Sense { LE, EQ, GE };
enum class SolveStatus { Optimal, Infeasible, MaxIterations };

struct PsdBlockSpec {
    std::string name;
    std::size_t dim = 0;
};

struct ScalarSpec {
    std::string name;
    std::optional<double> lower;
    std::optional<double> upper;
};

/// One row: sum_b <coeff_matrices[b], X_b> + sum_i scalar_coeffs[i]*y_i  (sense)  rhs.
/// An empty coefficient matrix stands for a zero block.
struct LinearConstraint {
    std::vector<CMatrix> coeff_matrices;
    std::vector<double> scalar_coeffs;
    Sense sense = Sense::LE;
    double rhs = 0.0;
    std::string label;
};

/// Minimization over a product of PSD blocks and bounded scalars with
/// linear trace constraints.
struct ConicProblem {
    std::vector<PsdBlockSpec> psd_blocks;
    std::vector<ScalarSpec> scalar_vars;
    std::vector<CMatrix> objective_matrices;  // parallel to psd_blocks
    std::vector<double> objective_scalars;    // parallel to scalar_vars
    std::vector<LinearConstraint> constraints;

    std::size_t add_psd_block(const std::string& name, std::size_t dim);
    std::size_t add_scalar(const std::string& name,
                           std::optional<double> lower = std::nullopt,
                           std::optional<double> upper = std::nullopt);
    /// Zero row sized for the current variable set.
    LinearConstraint make_row() const;
};

struct ConicSolution {
    std::map<std::string, CMatrix> psd_values;
    std::map<std::string, double> scalar_values;
    double objective_value = 0.0;
    SolveStatus status = SolveStatus::MaxIterations;
    double max_constraint_violation = 0.0;
    std::size_t iterations = 0;
};

/// Primal-dual interior-point solve over {PSD, nonnegative} cones.
ConicSolution solve(const ConicProblem& problem, double tol = 1e-7,
                    std::size_t max_iter = 200);

/// cut(x) = slope*x + intercept, valid as part of a pointwise-minimum
/// underestimator of log2(offset + x).
struct TangentCut {
    double anchor = 0.0;
    double slope = 0.0;
    double intercept = 0.0;

    double value(double x) const { return slope * x + intercept; }
};

/// Piecewise-linear underestimator of f(x) = log2(offset + x) on
/// [min(anchors), inf): secants between consecutive sorted anchors plus a
/// flat cap at the largest anchor. The minimum over the cuts never exceeds
/// f and touches it at every anchor.
std::vector<TangentCut> log_tangent_cuts(std::vector<double> anchors, double offset);

/// Minimum over a cut family.
double min_cut_value(const std::vector<TangentCut>& cuts, double x);

/// Plain-text dump (block dims, scalar bounds, constraint triplets) for
/// offline inspection.
void dump_problem(const ConicProblem& problem, std::ostream& out);

}  // namespace isabc
