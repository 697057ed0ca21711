#include "codeplex/model.hpp"

#include "codeplex/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

namespace codeplex {

// ---------------------------------------------------------------------------
// outcomes

OutcomeMatrix OutcomeMatrix::from_records(const std::vector<OutcomeRecord>& records) {
    OutcomeMatrix m;
    std::set<std::string> qs;
    std::set<std::string> ms;
    for (const auto& r : records) {
        if (r.correct != 0 && r.correct != 1) {
            throw Error(ErrorCode::kInvalidArgument, "outcome for (" + r.question_id + ", " + r.model_id +
                                                         ") must be 0 or 1");
        }
        qs.insert(r.question_id);
        ms.insert(r.model_id);
    }
    m.questions_.assign(qs.begin(), qs.end());
    m.models_.assign(ms.begin(), ms.end());
    for (std::size_t i = 0; i < m.questions_.size(); ++i) m.q_index_.emplace(m.questions_[i], i);
    for (std::size_t j = 0; j < m.models_.size(); ++j) m.m_index_.emplace(m.models_[j], j);
    m.entries_.assign(m.questions_.size() * m.models_.size(), -1);
    for (const auto& r : records) {
        auto& cell = m.entries_[m.q_index_.at(r.question_id) * m.models_.size() + m.m_index_.at(r.model_id)];
        if (cell != -1) {
            throw Error(ErrorCode::kInvalidArgument, "duplicate outcome for (" + r.question_id + ", " + r.model_id + ")");
        }
        cell = static_cast<std::int8_t>(r.correct);
    }
    return m;
}

std::optional<std::size_t> OutcomeMatrix::model_index(std::string_view model_id) const {
    auto it = m_index_.find(model_id);
    if (it == m_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> OutcomeMatrix::question_index(std::string_view question_id) const {
    auto it = q_index_.find(question_id);
    if (it == q_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<int> OutcomeMatrix::get(std::string_view question_id, std::string_view model_id) const {
    const auto q = question_index(question_id);
    const auto m = model_index(model_id);
    if (!q || !m) return std::nullopt;
    const int v = at(*q, *m);
    if (v < 0) return std::nullopt;
    return v;
}

// ---------------------------------------------------------------------------
// encoding

std::optional<std::size_t> FeatureMatrix::row_of(std::string_view question_id) const {
    for (std::size_t i = 0; i < question_ids.size(); ++i) {
        if (question_ids[i] == question_id) return i;
    }
    return std::nullopt;
}

FeatureMatrix encode(const std::vector<CanonicalAst>& asts, const SubtreeCatalog& catalog,
                     std::string_view canonicalization) {
    if (!canonicalization.empty() && !catalog.canonicalization.empty() && canonicalization != catalog.canonicalization) {
        throw Error(ErrorCode::kCatalogMismatch, "programs were canonicalized with settings " + std::string(canonicalization) +
                                                     " but the catalog expects " + catalog.canonicalization);
    }
    FeatureMatrix fm;
    fm.catalog_fingerprint = catalog.fingerprint();
    fm.canonicalization = catalog.canonicalization;
    fm.width = catalog.size();
    fm.rows.reserve(asts.size());
    for (const auto& ast : asts) {
        fm.question_ids.push_back(ast.question_id);
        std::vector<std::uint8_t> row(catalog.size(), 0);
        for (std::size_t k = 0; k < catalog.size(); ++k) row[k] = iso(ast, catalog.patterns[k]) ? 1 : 0;
        fm.rows.push_back(std::move(row));
    }
    return fm;
}

// ---------------------------------------------------------------------------
// labels

SoftLabelSet soft_labels(const OutcomeMatrix& outcomes, const std::vector<std::string>& train_models,
                         const std::vector<std::string>* questions) {
    if (train_models.empty()) throw Error(ErrorCode::kInvalidArgument, "train model list is empty");
    std::vector<std::size_t> cols;
    for (const auto& m : train_models) {
        const auto idx = outcomes.model_index(m);
        if (!idx) throw Error(ErrorCode::kInvalidArgument, "unknown model id '" + m + "'");
        cols.push_back(*idx);
    }
    const std::vector<std::string>& ids = questions != nullptr ? *questions : outcomes.question_ids();
    SoftLabelSet out;
    for (const auto& q : ids) {
        const auto qi = outcomes.question_index(q);
        double sum = 0.0;
        double count = 0.0;
        if (qi) {
            for (std::size_t c : cols) {
                const int v = outcomes.at(*qi, c);
                if (v >= 0) {
                    sum += v;
                    count += 1.0;
                }
            }
        }
        if (count == 0.0) {
            out.excluded.push_back(q);
            continue;
        }
        out.labels.push_back({q, sum / count, count});
    }
    return out;
}

// ---------------------------------------------------------------------------
// objective

double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

// log(1 + exp(z)) without overflow
double softplus(double z) noexcept {
    if (z > 0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

LogisticObjective::LogisticObjective(const std::vector<std::span<const std::uint8_t>>& rows, std::vector<double> labels,
                                     std::vector<double> weights, double reg_C)
    : labels_(std::move(labels)), weights_(std::move(weights)), reg_C_(reg_C) {
    if (rows.size() != labels_.size() || rows.size() != weights_.size()) {
        throw Error(ErrorCode::kInvalidArgument, "rows, labels and weights differ in length");
    }
    if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "no training rows");
    if (!(reg_C > 0.0)) throw Error(ErrorCode::kInvalidArgument, "reg_C must be positive");
    width_ = rows.front().size();
    active_.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.size() != width_) throw Error(ErrorCode::kInvalidArgument, "ragged feature rows");
        std::vector<std::uint32_t> nz;
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (row[k] != 0) nz.push_back(static_cast<std::uint32_t>(k));
        }
        active_.push_back(std::move(nz));
    }
    for (double w : weights_) {
        if (!(w > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sample weights must be positive");
    }
    total_weight_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

double LogisticObjective::evaluate(std::span<const double> params, std::span<double> grad) const {
    const double bias = params[width_];
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < active_.size(); ++i) {
        double z = bias;
        for (auto k : active_[i]) z += params[k];
        // CE(sigmoid(z), y) = softplus(z) - y z
        loss += weights_[i] * (softplus(z) - labels_[i] * z);
        if (want_grad) {
            const double r = weights_[i] * (sigmoid(z) - labels_[i]);
            for (auto k : active_[i]) grad[k] += r;
            grad[width_] += r;
        }
    }
    double penalty = 0.0;
    for (std::size_t k = 0; k < width_; ++k) penalty += params[k] * params[k];
    const double value = loss / total_weight_ + penalty / (2.0 * reg_C_ * total_weight_);
    if (want_grad) {
        for (std::size_t k = 0; k < width_; ++k) grad[k] = grad[k] / total_weight_ + params[k] / (reg_C_ * total_weight_);
        grad[width_] /= total_weight_;
    }
    return value;
}

// ---------------------------------------------------------------------------
// solver

namespace {

struct SolverState {
    std::vector<double> x;
    std::vector<double> g;
    double f = 0.0;
    int iterations = 0;
};

bool converged(const SolverState& s, double tol) { return norm2(s.g) <= tol * std::max(1.0, std::abs(s.f)); }

// Limited-memory BFGS with Armijo backtracking. Returns when converged, when
// the line search can no longer make progress, or at the iteration cap.
void run_lbfgs(const LogisticObjective& obj, SolverState& s, double tol, int max_iter) {
    constexpr std::size_t kMemory = 10;
    const std::size_t n = s.x.size();
    std::deque<std::vector<double>> s_hist;
    std::deque<std::vector<double>> y_hist;
    std::deque<double> rho_hist;
    std::vector<double> d(n);
    std::vector<double> x_new(n);
    std::vector<double> g_new(n);
    std::vector<double> alpha(kMemory);

    while (s.iterations < max_iter && !converged(s, tol)) {
        // two-loop recursion
        for (std::size_t i = 0; i < n; ++i) d[i] = -s.g[i];
        const std::size_t m = s_hist.size();
        for (std::size_t j = m; j-- > 0;) {
            alpha[j] = rho_hist[j] * dot(s_hist[j], d);
            for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[j] * y_hist[j][i];
        }
        double gamma = 1.0;
        if (m > 0) gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
        for (double& v : d) v *= gamma;
        for (std::size_t j = 0; j < m; ++j) {
            const double beta = rho_hist[j] * dot(y_hist[j], d);
            for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[j] - beta) * s_hist[j][i];
        }
        double slope = dot(s.g, d);
        if (!(slope < 0.0)) {
            // lost descent direction; restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = -s.g[i];
            slope = dot(s.g, d);
        }
        double step = (m == 0) ? std::min(1.0, 1.0 / std::max(norm2(s.g), 1e-300)) : 1.0;
        bool accepted = false;
        double f_new = 0.0;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = s.x[i] + step * d[i];
            f_new = obj.evaluate(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= s.f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++s.iterations;
        if (!accepted) return;

        std::vector<double> sv(n);
        std::vector<double> yv(n);
        for (std::size_t i = 0; i < n; ++i) {
            sv[i] = x_new[i] - s.x[i];
            yv[i] = g_new[i] - s.g[i];
        }
        const double sy = dot(sv, yv);
        const bool stalled = f_new == s.f && norm2(sv) <= 1e-300;
        s.x.swap(x_new);
        s.g.swap(g_new);
        s.f = f_new;
        if (stalled) return;
        if (sy > 1e-12 * norm2(sv) * norm2(yv)) {
            if (s_hist.size() == kMemory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(std::move(sv));
            y_hist.push_back(std::move(yv));
            rho_hist.push_back(1.0 / sy);
        }
    }
}

// Damped Newton steps accepted on decrease of the gradient norm; used to
// finish once L-BFGS stalls at floating-point resolution of the objective.
void run_newton(const LogisticObjective& obj, SolverState& s, double tol, int max_iter) {
    const std::size_t n = s.x.size();
    const std::size_t width = n - 1;
    const double total = obj.total_weight();
    std::vector<double> x_new(n);
    std::vector<double> g_new(n);
    for (int iter = 0; iter < max_iter && !converged(s, tol); ++iter) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        const auto& active = obj.active();
        for (std::size_t i = 0; i < active.size(); ++i) {
            double z = s.x[width];
            for (auto k : active[i]) z += s.x[k];
            const double p = sigmoid(z);
            const double c = obj.sample_weights()[i] * p * (1.0 - p) / total;
            for (auto a : active[i]) {
                for (auto b : active[i]) h(a, b) += c;
                h(a, static_cast<Eigen::Index>(width)) += c;
                h(static_cast<Eigen::Index>(width), a) += c;
            }
            h(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(width)) += c;
        }
        for (std::size_t k = 0; k < width; ++k) h(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) += 1.0 / (obj.reg_C() * total);
        Eigen::VectorXd grad = Eigen::Map<const Eigen::VectorXd>(s.g.data(), static_cast<Eigen::Index>(n));
        Eigen::VectorXd delta = h.ldlt().solve(-grad);
        if (!delta.allFinite()) return;

        const double g_norm = norm2(s.g);
        double step = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = s.x[i] + step * delta(static_cast<Eigen::Index>(i));
            const double f_new = obj.evaluate(x_new, g_new);
            if (std::isfinite(f_new) && (f_new < s.f || (f_new <= s.f + 1e-14 * std::abs(s.f) && norm2(g_new) < g_norm))) {
                s.x.swap(x_new);
                s.g.swap(g_new);
                s.f = f_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++s.iterations;
        if (!accepted) return;
    }
}

constexpr std::size_t kNewtonMaxDimension = 4000;

}  // namespace

ComplexityModel fit(const FeatureMatrix& features, const std::vector<SoftLabel>& labels, const FitOptions& options) {
    if (!(options.reg_C > 0.0)) throw Error(ErrorCode::kInvalidArgument, "reg_C must be positive");
    std::map<std::string, const SoftLabel*, std::less<>> by_id;
    for (const auto& l : labels) by_id.emplace(l.question_id, &l);

    // Rows are gathered in sorted question-id order so the fit does not depend
    // on the order questions appear in the inputs.
    std::vector<std::pair<std::string, std::size_t>> order;
    for (std::size_t i = 0; i < features.question_ids.size(); ++i) {
        if (by_id.count(features.question_ids[i]) != 0) order.emplace_back(features.question_ids[i], i);
    }
    std::sort(order.begin(), order.end());
    if (order.empty()) throw Error(ErrorCode::kInvalidArgument, "no labelled question has a feature row");

    std::vector<std::span<const std::uint8_t>> rows;
    std::vector<double> ys;
    std::vector<double> ws;
    for (const auto& [id, i] : order) {
        const SoftLabel& l = *by_id.at(id);
        rows.emplace_back(features.rows[i]);
        ys.push_back(l.label);
        ws.push_back(l.weight);
    }
    LogisticObjective obj(rows, std::move(ys), std::move(ws), options.reg_C);

    SolverState state;
    state.x.assign(obj.dimension(), 0.0);
    state.g.assign(obj.dimension(), 0.0);
    state.f = obj.evaluate(state.x, state.g);
    std::string solver = "lbfgs";
    run_lbfgs(obj, state, options.tolerance, options.max_iterations);
    if (!converged(state, options.tolerance) && obj.dimension() <= kNewtonMaxDimension) {
        solver = "lbfgs+newton";
        run_newton(obj, state, options.tolerance, std::max(0, options.max_iterations - state.iterations));
    }

    ComplexityModel model;
    model.weights.assign(state.x.begin(), state.x.end() - 1);
    model.bias = state.x.back();
    model.reg_C = options.reg_C;
    model.catalog_fingerprint = features.catalog_fingerprint;
    model.fit_report.objective = state.f;
    model.fit_report.gradient_norm = norm2(state.g);
    model.fit_report.iterations = state.iterations;
    model.fit_report.converged = converged(state, options.tolerance);
    model.fit_report.solver = solver;
    model.fit_report.questions = order.size();
    if (!model.fit_report.converged) {
        throw Error(ErrorCode::kNonConvergence, "fit did not reach gradient tolerance after " +
                                                    std::to_string(state.iterations) + " iterations (gradient norm " +
                                                    std::to_string(model.fit_report.gradient_norm) + ")");
    }
    return model;
}

double score(const ComplexityModel& model, std::span<const std::uint8_t> row) {
    if (row.size() != model.weights.size()) {
        throw Error(ErrorCode::kCatalogMismatch, "feature row has " + std::to_string(row.size()) + " columns, model expects " +
                                                     std::to_string(model.weights.size()));
    }
    double z = model.bias;
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k] != 0) z += model.weights[k];
    }
    return -sigmoid(z);
}

}  // namespace codeplex
