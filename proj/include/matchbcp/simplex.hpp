#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "matchbcp/matching_network.hpp"
#include "matchbcp/static_plan.hpp"

namespace matchbcp {

struct InfeasibleProblem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LPSolution {
    enum class Status { Optimal, Infeasible };
    Vec x;
    double objective = 0.0;
    Status status = Status::Infeasible;
    bool degenerate = false;
    std::vector<int> basic_columns;  // columns of the final simplex basis
};

namespace detail {

// Dense two-phase tableau simplex with Bland's anti-cycling rule, for
//   max c.x  s.t.  Ax = b (b >= 0), x >= 0.
// A may be row-rank-deficient; redundant rows are detected at the end of
// phase 1 and deactivated. Problem sizes here are tiny (I <= 120, J <= 250).
class TableauSimplex {
public:
    TableauSimplex(const Mat& A, const Vec& b, const Vec& c)
        : m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())),
          cost_(c), T_(m_, n_ + m_ + 1), basis_(m_), active_(m_, true) {
        T_.leftCols(n_) = A;
        T_.middleCols(n_, m_) = Mat::Identity(m_, m_);
        T_.col(n_ + m_) = b;
        for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;
    }

    LPSolution solve() {
        // Phase 1: minimize the sum of artificials.
        Vec rc = Vec::Zero(n_ + m_);
        for (int j = 0; j < n_; ++j) rc[j] = -T_.col(j).sum();
        double z = T_.col(n_ + m_).sum();
        iterate(rc, z);
        if (z > 1e-7) {
            LPSolution sol;
            sol.status = LPSolution::Status::Infeasible;
            return sol;
        }
        purge_artificials();

        // Phase 2: minimize -c.x over structural columns.
        rc.setZero();
        z = 0.0;
        for (int j = 0; j < n_; ++j) rc[j] = -cost_[j];
        for (int i = 0; i < m_; ++i) {
            if (!active_[i] || basis_[i] >= n_) continue;
            const double cb = -cost_[basis_[i]];
            if (cb == 0.0) continue;
            for (int j = 0; j < n_; ++j) rc[j] -= cb * T_(i, j);
            z += cb * rhs(i);
        }
        for (int i = 0; i < m_; ++i)
            if (active_[i] && basis_[i] < n_) rc[basis_[i]] = 0.0;
        iterate(rc, z);

        LPSolution sol;
        sol.status = LPSolution::Status::Optimal;
        sol.x = Vec::Zero(n_);
        std::vector<int> basic_cols;
        for (int i = 0; i < m_; ++i) {
            if (!active_[i]) continue;
            if (basis_[i] < n_) {
                sol.x[basis_[i]] = rhs(i);
                basic_cols.push_back(basis_[i]);
                if (rhs(i) <= kBasicThreshold) sol.degenerate = true;
            }
        }
        for (int j = 0; j < n_; ++j) {
            bool in_basis = false;
            for (int i = 0; i < m_; ++i)
                if (active_[i] && basis_[i] == j) in_basis = true;
            if (!in_basis && std::abs(rc[j]) <= 1e-9) sol.degenerate = true;
        }
        sol.x = sol.x.cwiseMax(0.0);
        sol.objective = cost_.dot(sol.x);
        sol.basic_columns = basic_cols;
        return sol;
    }

private:
    static constexpr double kPivTol = 1e-9;

    double rhs(int i) const { return T_(i, n_ + m_); }

    // Bland pivoting until no structural column improves. Artificials never
    // re-enter the basis.
    void iterate(Vec& rc, double& z) {
        for (;;) {
            int enter = -1;  // Bland: lowest improving index
            for (int j = 0; j < n_; ++j) {
                if (rc[j] < -kPivTol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return;
            int leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m_; ++i) {
                if (!active_[i] || T_(i, enter) <= kPivTol) continue;
                const double ratio = rhs(i) / T_(i, enter);
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 &&
                     (leave < 0 || basis_[i] < basis_[leave]))) {
                    best_ratio = ratio;
                    leave = i;
                }
            }
            if (leave < 0)
                throw std::logic_error("simplex: unbounded direction (Rx=lambda, x>=0 is bounded)");
            pivot(leave, enter, rc, z);
        }
    }

    void pivot(int row, int col, Vec& rc, double& z) {
        const double piv = T_(row, col);
        T_.row(row) /= piv;
        for (int i = 0; i < m_; ++i) {
            if (i == row || !active_[i]) continue;
            const double f = T_(i, col);
            if (f != 0.0) T_.row(i) -= f * T_.row(row);
        }
        const double fz = rc[col];
        if (fz != 0.0) {
            rc -= fz * T_.row(row).head(n_ + m_).transpose();
            z += fz * rhs(row);
        }
        basis_[row] = col;
    }

    // Pivot leftover artificials out of the basis; rows with no structural
    // pivot candidate are redundant equalities and get deactivated.
    void purge_artificials() {
        for (int i = 0; i < m_; ++i) {
            if (!active_[i] || basis_[i] < n_) continue;
            int col = -1;
            for (int j = 0; j < n_; ++j) {
                if (std::abs(T_(i, j)) > 1e-7) {
                    col = j;
                    break;
                }
            }
            if (col < 0) {
                active_[i] = false;
                continue;
            }
            Vec dummy_rc = Vec::Zero(n_ + m_);
            double dummy_z = 0.0;
            pivot(i, col, dummy_rc, dummy_z);
        }
    }

    int m_, n_;
    Vec cost_;
    Mat T_;
    std::vector<int> basis_;
    std::vector<bool> active_;
};

}  // namespace detail

// Static planning problem (the nominal-rate LP): max v.x s.t. Rx = lambda,
// x >= 0. The optimal basis is re-solved with a rank-revealing QR afterwards
// so the reported rates are exact to machine precision, not tableau-drift
// precision.
inline LPSolution solve_spp(const MatchingNetwork& net) {
    const Mat R = build_matching_matrix(net);
    detail::TableauSimplex simplex(R, net.arrival_rates(), net.match_values());
    LPSolution sol = simplex.solve();
    if (sol.status != LPSolution::Status::Optimal) return sol;

    if (!sol.basic_columns.empty()) {
        Mat B(net.num_classes(), static_cast<int>(sol.basic_columns.size()));
        for (int p = 0; p < B.cols(); ++p) B.col(p) = R.col(sol.basic_columns[p]);
        const Vec xb = B.colPivHouseholderQr().solve(net.arrival_rates());
        if ((B * xb - net.arrival_rates()).cwiseAbs().maxCoeff() < 1e-8) {
            Vec polished = Vec::Zero(net.num_activities());
            for (int p = 0; p < B.cols(); ++p)
                polished[sol.basic_columns[p]] = std::max(0.0, xb[p]);
            if ((R * polished - net.arrival_rates()).cwiseAbs().maxCoeff() <=
                (R * sol.x - net.arrival_rates()).cwiseAbs().maxCoeff() + 1e-12) {
                sol.x = polished;
                sol.objective = net.match_values().dot(sol.x);
            }
        }
    }
    return sol;
}

inline StaticPlan to_static_plan(const MatchingNetwork& net, const LPSolution& sol) {
    if (sol.status != LPSolution::Status::Optimal)
        throw InfeasibleProblem("no balanced nonnegative rate vector exists for " + net.name());
    return make_static_plan(net, sol.x);
}

}  // namespace matchbcp
