#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "isabc/conic.hpp"
#include "isabc/numerics.hpp"

#include <cmath>
#include <sstream>

using namespace isabc;

namespace {

CMatrix random_hermitian(std::size_t n, Rng& rng) {
    CMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.circular_gaussian();
    return hermitian_part(a);
}

}  // namespace

TEST_CASE("scalar sdp: min trace(X) s.t. trace(X) >= 1") {
    ConicProblem p;
    std::size_t x = p.add_psd_block("X", 1);
    p.objective_matrices[x](0, 0) = 1.0;
    LinearConstraint row = p.make_row();
    row.coeff_matrices[x](0, 0) = 1.0;
    row.sense = Sense::GE;
    row.rhs = 1.0;
    p.constraints.push_back(row);

    ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective_value == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(std::real(s.psd_values.at("X")(0, 0)) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("lp box: min y s.t. y >= 3") {
    ConicProblem p;
    std::size_t y = p.add_scalar("y", 3.0);
    p.objective_scalars[y] = 1.0;
    ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.scalar_values.at("y") == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("density matrix: min trace(CX), trace(X)=1") {
    ConicProblem p;
    std::size_t x = p.add_psd_block("X", 2);
    p.objective_matrices[x](0, 0) = 1.0;
    p.objective_matrices[x](1, 1) = 2.0;
    LinearConstraint row = p.make_row();
    row.coeff_matrices[x] = CMatrix::identity(2);
    row.sense = Sense::EQ;
    row.rhs = 1.0;
    p.constraints.push_back(row);

    ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::Optimal);

    // Bloch-ball oracle: objective depends on x11 alone, x11 in [0,1].
    double best = 1e300;
    for (int i = 0; i <= 1000; ++i) {
        const double x11 = i * 1e-3;
        best = std::min(best, x11 + 2.0 * (1.0 - x11));
    }
    CHECK(s.objective_value == doctest::Approx(best).epsilon(1e-5));
    CHECK(std::real(s.psd_values.at("X")(0, 0)) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("random two-block sdps vs eigenvalue oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n1 = 2 + trial % 3, n2 = 2 + (trial / 3) % 3;
        CMatrix c1 = random_hermitian(n1, rng);
        CMatrix c2 = random_hermitian(n2, rng);

        ConicProblem p;
        std::size_t x1 = p.add_psd_block("X1", n1);
        std::size_t x2 = p.add_psd_block("X2", n2);
        p.objective_matrices[x1] = c1;
        p.objective_matrices[x2] = c2;
        for (std::size_t b : {x1, x2}) {
            LinearConstraint row = p.make_row();
            row.coeff_matrices[b] = CMatrix::identity(b == x1 ? n1 : n2);
            row.sense = Sense::EQ;
            row.rhs = 1.0;
            p.constraints.push_back(row);
        }

        ConicSolution s = solve(p);
        REQUIRE(s.status == SolveStatus::Optimal);
        const double oracle =
            hermitian_eig(c1).values.back() + hermitian_eig(c2).values.back();
        CHECK(s.objective_value == doctest::Approx(oracle).epsilon(1e-5));

        for (const char* name : {"X1", "X2"}) {
            const CMatrix& x = s.psd_values.at(name);
            EigenPair e = hermitian_eig(x);
            CHECK(e.values.back() >= -1e-7 * (1.0 + std::real(x.trace())));
        }
        CHECK(s.max_constraint_violation <= 1e-6 * 2.0);
    }
}

TEST_CASE("weak duality against a hand-built feasible point") {
    // min 2a + 3b s.t. a + b >= 4, a >= 0.5; feasible point (4, 0.5) costs 9.5.
    ConicProblem p;
    std::size_t a = p.add_scalar("a", 0.5);
    std::size_t b = p.add_scalar("b", 0.0);
    p.objective_scalars[a] = 2.0;
    p.objective_scalars[b] = 3.0;
    LinearConstraint row = p.make_row();
    row.scalar_coeffs[a] = 1.0;
    row.scalar_coeffs[b] = 1.0;
    row.sense = Sense::GE;
    row.rhs = 4.0;
    p.constraints.push_back(row);

    ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective_value <= 9.5 + 1e-7 * (1.0 + 9.5));
    CHECK(s.objective_value == doctest::Approx(8.0).epsilon(1e-6));
}

TEST_CASE("objective scaling leaves the argmin unchanged") {
    Rng rng(5);
    CMatrix c = random_hermitian(3, rng) + CMatrix::identity(3) * 4.0;

    auto build = [&](double scale) {
        ConicProblem p;
        std::size_t x = p.add_psd_block("X", 3);
        p.objective_matrices[x] = c * scale;
        LinearConstraint row = p.make_row();
        row.coeff_matrices[x] = CMatrix::identity(3);
        row.sense = Sense::GE;
        row.rhs = 2.0;
        p.constraints.push_back(row);
        return solve(p);
    };
    ConicSolution s1 = build(1.0);
    ConicSolution s2 = build(37.0);
    REQUIRE(s1.status == SolveStatus::Optimal);
    REQUIRE(s2.status == SolveStatus::Optimal);
    CHECK((s1.psd_values.at("X") - s2.psd_values.at("X")).frobenius_norm() < 1e-6 * 3.0);
}

TEST_CASE("infeasible problem detected") {
    ConicProblem p;
    std::size_t x = p.add_psd_block("X", 2);
    p.objective_matrices[x] = CMatrix::identity(2);
    LinearConstraint lo_row = p.make_row();
    lo_row.coeff_matrices[x] = CMatrix::identity(2);
    lo_row.sense = Sense::GE;
    lo_row.rhs = 2.0;
    p.constraints.push_back(lo_row);
    LinearConstraint hi_row = p.make_row();
    hi_row.coeff_matrices[x] = CMatrix::identity(2);
    hi_row.sense = Sense::LE;
    hi_row.rhs = 1.0;
    p.constraints.push_back(hi_row);

    ConicSolution s = solve(p);
    CHECK(s.status == SolveStatus::Infeasible);
}

TEST_CASE("doubly bounded and mixed lp") {
    ConicProblem p;
    std::size_t a = p.add_scalar("a", 0.1, 0.9);
    std::size_t b = p.add_scalar("b", 0.0);
    p.objective_scalars[a] = -1.0;
    p.objective_scalars[b] = 2.0;
    LinearConstraint row = p.make_row();
    row.scalar_coeffs[a] = 1.0;
    row.scalar_coeffs[b] = -1.0;
    row.sense = Sense::LE;
    row.rhs = 0.5;
    p.constraints.push_back(row);

    ConicSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.scalar_values.at("a") == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(s.scalar_values.at("b") == doctest::Approx(0.0).epsilon(1e-4));
    CHECK(s.objective_value == doctest::Approx(-0.5).epsilon(1e-5));

    // Upper bound binds when the objective rewards it.
    ConicProblem q;
    std::size_t c = q.add_scalar("c", 0.1, 0.9);
    q.objective_scalars[c] = -1.0;
    LinearConstraint slack_row = q.make_row();
    slack_row.scalar_coeffs[c] = 1.0;
    slack_row.sense = Sense::LE;
    slack_row.rhs = 2.0;
    q.constraints.push_back(slack_row);
    ConicSolution sq = solve(q);
    REQUIRE(sq.status == SolveStatus::Optimal);
    CHECK(sq.scalar_values.at("c") == doctest::Approx(0.9).epsilon(1e-5));
}

TEST_CASE("log cuts touch the curve at anchors") {
    std::vector<TangentCut> cuts = log_tangent_cuts({0.0, 1.0, 3.0, 7.0}, 1.0);
    for (double a : {0.0, 1.0, 3.0, 7.0})
        CHECK(min_cut_value(cuts, a) == doctest::Approx(std::log2(1.0 + a)).epsilon(1e-12));
    // Secant from the origin slopes below the unit-slope tangent there.
    CHECK(cuts.front().slope < 1.0 / std::log(2.0));
    CHECK(cuts.front().slope > 0.9);
    CHECK(min_cut_value(cuts, 3.0) <= 2.0 + 1e-12);
}

TEST_CASE("log cuts never overestimate") {
    Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> anchors = {0.0};
        const int extra = 1 + static_cast<int>(rng.integer() % 4);
        for (int i = 0; i < extra; ++i) anchors.push_back(rng.uniform() * 20.0);
        std::vector<TangentCut> cuts = log_tangent_cuts(anchors, 1.0);
        for (int g = 0; g < (trial < 20 ? 1000 : 25); ++g) {
            const double mu = rng.uniform() * 40.0;
            CHECK(min_cut_value(cuts, mu) <= std::log2(1.0 + mu) + 1e-12);
        }
    }
}

TEST_CASE("log cut gap on the anchor hull") {
    std::vector<TangentCut> cuts = log_tangent_cuts({0.0, 1.0, 3.0, 7.0}, 1.0);
    double worst = 0.0;
    for (int i = 0; i <= 700; ++i) {
        const double mu = i * 0.01;
        worst = std::max(worst, std::log2(1.0 + mu) - min_cut_value(cuts, mu));
    }
    CHECK(worst <= 0.09);
}

TEST_CASE("log cuts reject anchors at or below -offset") {
    CHECK_THROWS_AS(log_tangent_cuts({-1.0}, 1.0), InvalidAnchor);
}

TEST_CASE("dump_problem emits a readable sketch") {
    ConicProblem p;
    std::size_t x = p.add_psd_block("X", 2);
    p.add_scalar("t", 0.0);
    LinearConstraint row = p.make_row();
    row.coeff_matrices[x] = CMatrix::identity(2);
    row.scalar_coeffs[0] = 1.0;
    row.sense = Sense::LE;
    row.rhs = 5.0;
    row.label = "cap";
    p.constraints.push_back(row);
    std::ostringstream os;
    dump_problem(p, os);
    CHECK(os.str().find("block X dim 2") != std::string::npos);
    CHECK(os.str().find("cap") != std::string::npos);
}
