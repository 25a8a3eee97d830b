// Copyright 2026 The snailkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snailkit/errors.hpp"

// Levenberg-Marquardt with a Nelder-Mead fallback for rank-deficient
// Jacobians. Parameters are plain vectors; names only label the result.
namespace snailkit::fit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct FitOptions {
    int max_iterations = 500;
    double step_tolerance = 1e-10;      // max relative parameter step
    double gradient_tolerance = 1e-12;  // scaled gradient, relative to max(1, cost)
    double cost_tolerance = 1e-15;      // relative cost decrease of an accepted step
    double initial_damping = 1e-3;
    double rank_tolerance = 1e-10;
    std::vector<double> scale;  // typical parameter magnitudes; empty = from p0
};

struct FitResult {
    std::vector<std::string> names;
    Vector params;
    Vector std_errors;
    Matrix covariance;
    double residual_norm = 0.0;  // sum of squared (weighted) residuals
    double gradient_norm = 0.0;
    int iterations = 0;
    int dof = 0;
    bool converged = false;
    std::string convention_notes;

    int index_of(std::string_view name) const {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw BadInput("no fit parameter named " + std::string(name));
        return static_cast<int>(it - names.begin());
    }
    double param(std::string_view name) const { return params[index_of(name)]; }
    double error(std::string_view name) const { return std_errors[index_of(name)]; }

    void note(const std::string &text) {
        if (!convention_notes.empty()) convention_notes += "; ";
        convention_notes += text;
    }

    const FitResult &require_converged() const {
        if (!converged) throw NoConvergence("fit did not converge: " + convention_notes);
        return *this;
    }
};

using ResidualFn = std::function<Vector(const Vector &)>;
using JacobianFn = std::function<Matrix(const Vector &)>;

struct Problem {
    std::vector<std::string> names;
    ResidualFn residual;
    JacobianFn jacobian;  // optional; central differences when empty
    bool absolute_sigma = false;  // residuals already divided by known sigma
};

/// Central-difference Jacobian with steps cbrt(eps) * max(|p_j|, scale_j).
inline Matrix numeric_jacobian(const ResidualFn &f, const Vector &p, std::span<const double> scale) {
    const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
    Matrix jac;
    Vector q = p;
    for (int j = 0; j < p.size(); ++j) {
        const double s = scale.empty() ? 1.0 : scale[j];
        const double h = h0 * std::max(std::abs(p[j]), s);
        q[j] = p[j] + h;
        const Vector up = f(q);
        q[j] = p[j] - h;
        const Vector dn = f(q);
        q[j] = p[j];
        if (j == 0) jac.resize(up.size(), p.size());
        jac.col(j) = (up - dn) / ((p[j] + h) - (p[j] - h));
    }
    return jac;
}

namespace detail {

inline double cost_of(const Vector &r) {
    const double c = r.squaredNorm();
    return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
}

inline std::vector<double> resolve_scale(const FitOptions &opt, const Vector &p0) {
    if (!opt.scale.empty()) {
        if (static_cast<int>(opt.scale.size()) != p0.size()) throw BadInput("scale length mismatch");
        return opt.scale;
    }
    std::vector<double> s(p0.size());
    for (int j = 0; j < p0.size(); ++j) s[j] = p0[j] != 0.0 ? std::abs(p0[j]) : 1.0;
    return s;
}

inline int scaled_rank(const Matrix &jac, const std::vector<double> &scale, double tol) {
    Matrix js = jac;
    for (int j = 0; j < js.cols(); ++j) js.col(j) *= scale[j];
    Eigen::ColPivHouseholderQR<Matrix> qr(js);
    qr.setThreshold(tol);
    return static_cast<int>(qr.rank());
}

struct SimplexOutcome {
    Vector best;
    double cost = 0.0;
    int evaluations = 0;
    bool converged = false;
};

// Nelder-Mead on the cost in parameter space scaled by `scale`.
inline SimplexOutcome nelder_mead(const ResidualFn &f, const Vector &start,
                                  const std::vector<double> &scale, int max_evals) {
    const int n = static_cast<int>(start.size());
    std::vector<Vector> pts(n + 1, start);
    std::vector<double> cost(n + 1);
    int evals = 0;
    const auto eval = [&](const Vector &p) {
        ++evals;
        return cost_of(f(p));
    };
    for (int j = 0; j < n; ++j) pts[j + 1][j] += 0.05 * std::max(std::abs(start[j]), scale[j]);
    for (int i = 0; i <= n; ++i) cost[i] = eval(pts[i]);

    std::vector<int> order(n + 1);
    bool converged = false;
    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return cost[a] < cost[b]; });
        const int best = order.front();
        const int worst = order.back();
        const int second = order[n - 1];

        double size = 0.0;
        for (int i = 0; i <= n; ++i) {
            for (int j = 0; j < n; ++j) {
                size = std::max(size, std::abs(pts[i][j] - pts[best][j]) /
                                          std::max(std::abs(pts[best][j]), scale[j]));
            }
        }
        const double spread = cost[worst] - cost[best];
        if (size < 1e-11 || spread <= 1e-15 * cost[best] + 1e-300) {
            converged = true;
            break;
        }

        Vector centroid = Vector::Zero(n);
        for (int i = 0; i <= n; ++i) {
            if (i != worst) centroid += pts[i];
        }
        centroid /= n;
        const Vector refl = centroid + (centroid - pts[worst]);
        const double c_refl = eval(refl);
        if (c_refl < cost[best]) {
            const Vector expd = centroid + 2.0 * (centroid - pts[worst]);
            const double c_exp = eval(expd);
            if (c_exp < c_refl) {
                pts[worst] = expd;
                cost[worst] = c_exp;
            } else {
                pts[worst] = refl;
                cost[worst] = c_refl;
            }
        } else if (c_refl < cost[second]) {
            pts[worst] = refl;
            cost[worst] = c_refl;
        } else {
            const bool outside = c_refl < cost[worst];
            const Vector contr = outside ? Vector(centroid + 0.5 * (refl - centroid))
                                         : Vector(centroid + 0.5 * (pts[worst] - centroid));
            const double c_con = eval(contr);
            if (c_con < std::min(c_refl, cost[worst])) {
                pts[worst] = contr;
                cost[worst] = c_con;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
                    cost[i] = eval(pts[i]);
                }
            }
        }
    }
    const int best = static_cast<int>(std::min_element(cost.begin(), cost.end()) - cost.begin());
    return {pts[best], cost[best], evals, converged};
}

inline void fill_covariance(FitResult &res, const Matrix &jac, int m, bool absolute_sigma) {
    const int n = static_cast<int>(res.params.size());
    res.dof = m - n;
    const Matrix normal = jac.transpose() * jac;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(normal);
    Matrix inv = cod.pseudoInverse();
    if (res.dof > 0 && absolute_sigma) {
        res.covariance = inv;
    } else if (res.dof > 0) {
        res.covariance = inv * (res.residual_norm / res.dof);
    } else {
        res.covariance = Matrix::Zero(n, n);
        res.note("no residual degrees of freedom; standard errors set to 0");
    }
    res.std_errors.resize(n);
    for (int j = 0; j < n; ++j) res.std_errors[j] = std::sqrt(std::max(0.0, res.covariance(j, j)));
}

}  // namespace detail

/// Minimizes |r(p)|^2 from `p0`.
///
/// Damped Gauss-Newton steps solve (J'J + lambda diag(J'J)) dp = -J'r; lambda
/// shrinks tenfold on success and grows tenfold on failure. Converges when
/// the relative step drops below `step_tolerance` or the scaled gradient below
/// `gradient_tolerance`. If the scaled Jacobian loses rank, the remaining
/// search is a Nelder-Mead simplex and the switch is recorded in the notes.
/// Non-convergence is reported through `converged`, not thrown.
inline FitResult least_squares(const Problem &problem, const Vector &p0, const FitOptions &opt = {}) {
    const int n = static_cast<int>(p0.size());
    if (n == 0) throw BadInput("no parameters to fit");
    if (!p0.allFinite()) throw BadInput("initial parameters must be finite");
    if (!problem.names.empty() && static_cast<int>(problem.names.size()) != n) {
        throw BadInput("parameter names and initial values differ in length");
    }
    const auto scale = detail::resolve_scale(opt, p0);
    const auto jacobian = [&](const Vector &p) {
        return problem.jacobian ? problem.jacobian(p) : numeric_jacobian(problem.residual, p, scale);
    };

    FitResult res;
    res.names = problem.names;
    if (res.names.empty()) {
        for (int j = 0; j < n; ++j) res.names.push_back("p" + std::to_string(j));
    }
    if (problem.absolute_sigma) res.note("covariance from absolute sigma");

    Vector p = p0;
    Vector r = problem.residual(p);
    const int m = static_cast<int>(r.size());
    if (m < n) throw BadInput("fewer data points than parameters");
    double cost = detail::cost_of(r);
    if (!std::isfinite(cost)) throw BadInput("model is not finite at the initial parameters");

    double lambda = opt.initial_damping;
    bool converged = false;
    bool use_simplex = false;
    int it = 0;
    Matrix jac;
    for (; it < opt.max_iterations; ++it) {
        jac = jacobian(p);
        const Vector grad = jac.transpose() * r;
        double gnorm = 0.0;
        for (int j = 0; j < n; ++j) gnorm = std::max(gnorm, std::abs(grad[j]) * scale[j]);
        res.gradient_norm = gnorm;
        if (cost == 0.0 || gnorm < opt.gradient_tolerance * std::max(1.0, cost)) {
            converged = true;
            break;
        }
        const int rank = detail::scaled_rank(jac, scale, opt.rank_tolerance);
        if (rank < n) {
            res.note("rank-deficient Jacobian (rank " + std::to_string(rank) + " of " +
                     std::to_string(n) + "); simplex fallback");
            use_simplex = true;
            break;
        }

        const Matrix normal = jac.transpose() * jac;
        Vector diag = normal.diagonal();
        const double floor = 1e-12 * std::max(diag.maxCoeff(), 1e-300);
        for (int j = 0; j < n; ++j) diag[j] = std::max(diag[j], floor);

        bool stepped = false;
        while (!stepped) {
            Matrix damped = normal;
            damped.diagonal() += lambda * diag;
            const Vector step = damped.ldlt().solve(-grad);
            double rel = 0.0;
            for (int j = 0; j < n; ++j) {
                rel = std::max(rel, std::abs(step[j]) / std::max(std::abs(p[j]), scale[j]));
            }
            const Vector trial = p + step;
            const Vector r_trial = problem.residual(trial);
            const double c_trial = detail::cost_of(r_trial);
            if (step.allFinite() && c_trial < cost) {
                const double drop = (cost - c_trial) / cost;
                p = trial;
                r = r_trial;
                cost = c_trial;
                lambda = std::max(lambda / 10.0, 1e-15);
                stepped = true;
                if (rel < opt.step_tolerance || drop < opt.cost_tolerance) converged = true;
            } else {
                if (rel < opt.step_tolerance) {
                    // No representable improvement left along the damped step.
                    converged = true;
                    break;
                }
                lambda *= 10.0;
                if (lambda > 1e20) break;
            }
        }
        if (converged || !stepped) {
            ++it;
            break;
        }
    }

    if (use_simplex) {
        const auto out = detail::nelder_mead(problem.residual, p, scale, 4000 * n);
        it += out.evaluations;
        p = out.best;
        r = problem.residual(p);
        cost = detail::cost_of(r);
        converged = out.converged;
        jac = jacobian(p);
    } else {
        jac = jacobian(p);
    }
    if (!converged && it >= opt.max_iterations) res.note("iteration cap reached");

    res.params = p;
    res.residual_norm = cost;
    res.iterations = it;
    res.converged = converged;
    detail::fill_covariance(res, jac, m, problem.absolute_sigma);
    return res;
}

/// Pointwise model y = model(x, p) against data (x, y), optionally weighted by sigma.
template <class Model>
Problem curve_problem(Model model, std::vector<double> x, std::vector<double> y,
                      std::vector<double> sigma, std::vector<std::string> names) {
    if (x.size() != y.size()) throw BadInput("x and y differ in length");
    if (!sigma.empty() && sigma.size() != x.size()) throw BadInput("sigma length mismatch");
    for (double s : sigma) {
        if (!(s > 0.0)) throw BadInput("sigma entries must be positive");
    }
    Problem pr;
    pr.names = std::move(names);
    pr.absolute_sigma = !sigma.empty();
    pr.residual = [model = std::move(model), x = std::move(x), y = std::move(y),
                   sigma = std::move(sigma)](const Vector &p) {
        Vector r(static_cast<Eigen::Index>(x.size()));
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = model(x[i], p) - y[i];
            r[static_cast<Eigen::Index>(i)] = sigma.empty() ? d : d / sigma[i];
        }
        return r;
    };
    return pr;
}

/// Runs the fit from each start and keeps the lowest residual.
inline FitResult multi_start(const Problem &problem, const std::vector<Vector> &starts,
                             const FitOptions &opt = {}) {
    if (starts.empty()) throw BadInput("no starting points");
    std::optional<FitResult> best;
    for (const auto &s : starts) {
        FitResult r = least_squares(problem, s, opt);
        if (!best || (r.converged && !best->converged) ||
            (r.converged == best->converged && r.residual_norm < best->residual_norm)) {
            best = std::move(r);
        }
    }
    if (starts.size() > 1) best->note("best of " + std::to_string(starts.size()) + " starts");
    return *best;
}

}  // namespace snailkit::fit
