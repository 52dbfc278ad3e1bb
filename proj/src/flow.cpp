#include "stochflow/flow.hpp"

#include "stochflow/csv.hpp"
#include "stochflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>

namespace stochflow {

std::string_view to_string(SolverTag tag) {
    switch (tag) {
        case SolverTag::euler: return "euler";
        case SolverTag::chaos: return "chaos";
        case SolverTag::commutative_ito: return "commutative_ito";
        case SolverTag::commutative_strat: return "commutative_strat";
        case SolverTag::doss_sussmann: return "doss_sussmann";
        case SolverTag::inverse_dual: return "inverse_dual";
        case SolverTag::picard_schatten: return "picard_schatten";
    }
    return "unknown";
}

namespace {

void require_paths(const OperatorFamily& family, const WienerPaths& paths, std::size_t needed) {
    if (paths.count() < needed) {
        throw PathShortfall("family needs " + std::to_string(needed) + " Wiener paths, only " +
                            std::to_string(paths.count()) + " supplied");
    }
    (void)family;
}

Matrix identity_like(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return Matrix::Identity(n, n);
}

}  // namespace

void require_commuting(const OperatorFamily& family) {
    const auto [i, j] = family.first_noncommuting_pair();
    if (i >= 0) {
        throw NonCommutingFamily("family members B_" + std::to_string(i) + " and B_" + std::to_string(j) +
                                     " do not commute",
                                 i, j);
    }
}

// ---------------------------------------------------------------------------
// Euler

FlowSample euler_flow(const std::optional<TruncatedOperator>& generator, const OperatorFamily& family,
                      const WienerPaths& paths, EulerScheme scheme) {
    const std::size_t dim = family.dim();
    if (generator && generator->dim() != dim) {
        throw DimensionMismatch("generator has dim " + std::to_string(generator->dim()) + ", family has dim " +
                                std::to_string(dim));
    }
    require_paths(family, paths, family.noise_count());

    const TimeGrid& grid = paths.grid();
    const double dt = grid.dt();
    const std::size_t steps = grid.steps();

    Matrix propagator;
    Matrix drift = family.drift().matrix();
    const bool use_propagator = generator.has_value() && scheme == EulerScheme::exponential;
    if (use_propagator) propagator = matrix_exponential(Matrix(dt * generator->matrix()));
    if (generator && scheme == EulerScheme::plain) drift += generator->matrix();

    FlowSample out{grid, {}, SolverTag::euler, paths.seed(), paths.origin()};
    out.frames.reserve(steps + 1);
    Matrix x = identity_like(dim);
    out.frames.emplace_back(x);
    Matrix update(x.rows(), x.cols());
    for (std::size_t i = 0; i < steps; ++i) {
        update.noalias() = dt * (drift * x);
        for (std::size_t k = 0; k < family.noise_count(); ++k) {
            update.noalias() += paths.increment(k, i) * (family.noise()[k].matrix() * x);
        }
        x += update;
        if (use_propagator) x = propagator * x;
        out.frames.emplace_back(x);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Chaos expansion

std::vector<double> iterated_integral(const WienerPaths& paths, std::span<const int> alpha) {
    if (alpha.empty()) throw IndexOutOfRange("multi-index must be nonempty");
    const std::size_t n1 = paths.grid().steps() + 1;
    const double dt = paths.grid().dt();
    for (int a : alpha) {
        if (a < 0 || static_cast<std::size_t>(a) > paths.count()) {
            throw IndexOutOfRange("multi-index entry " + std::to_string(a) + " has no driving path");
        }
    }
    auto increment = [&](int letter, std::size_t i) {
        return letter == 0 ? dt : paths.increment(static_cast<std::size_t>(letter - 1), i);
    };
    // innermost integral first: I_(alpha_n), then I_(alpha_{n-1}, alpha_n), ...
    std::vector<double> inner(n1, 1.0);
    std::vector<double> outer(n1);
    for (std::size_t pos = alpha.size(); pos-- > 0;) {
        outer[0] = 0.0;
        for (std::size_t i = 0; i + 1 < n1; ++i) outer[i + 1] = outer[i] + inner[i] * increment(alpha[pos], i);
        std::swap(inner, outer);
    }
    return inner;
}

namespace {

struct ChaosLayout {
    std::vector<std::size_t> letters;  // family indices, position = digit
    std::vector<std::size_t> level_size;
    std::size_t total = 0;
};

ChaosLayout chaos_layout(const OperatorFamily& family, std::size_t cutoff, int max_order) {
    ChaosLayout layout;
    const bool has_drift = family.drift().matrix().cwiseAbs().maxCoeff() > 0.0;
    if (has_drift) layout.letters.push_back(0);
    for (std::size_t k = 1; k <= cutoff; ++k) layout.letters.push_back(k);
    layout.level_size.assign(static_cast<std::size_t>(max_order) + 1, 1);
    for (int n = 1; n <= max_order; ++n) {
        layout.level_size[n] = layout.level_size[n - 1] * layout.letters.size();
        layout.total += layout.level_size[n];
    }
    return layout;
}

}  // namespace

FlowSample chaos_flow(const OperatorFamily& family, const WienerPaths& paths, const ChaosConfig& cfg) {
    if (cfg.max_order < 1) throw DomainError("chaos depth must be >= 1");
    const std::size_t cutoff = cfg.index_cutoff == 0 ? family.noise_count() : cfg.index_cutoff;
    if (cutoff > family.noise_count()) throw IndexOutOfRange("chaos index cutoff exceeds family size");
    require_paths(family, paths, cutoff);
    const double tuples = std::pow(static_cast<double>(cutoff + 1), cfg.max_order);
    if (tuples > kChaosTupleLimit) {
        std::ostringstream msg;
        msg << "chaos expansion with (K+1)^n_max = " << tuples << " index tuples exceeds the limit "
            << kChaosTupleLimit;
        throw CombinatorialLimit(msg.str());
    }

    const ChaosLayout layout = chaos_layout(family, cutoff, cfg.max_order);
    const std::size_t base = layout.letters.size();
    const std::size_t dim = family.dim();
    const auto n = static_cast<Eigen::Index>(dim);
    const std::size_t top = static_cast<std::size_t>(cfg.max_order);
    const TimeGrid& grid = paths.grid();
    const double dt = grid.dt();

    FlowSample out{grid, {}, SolverTag::chaos, paths.seed(), paths.origin()};
    out.frames.reserve(grid.steps() + 1);
    out.frames.push_back(TruncatedOperator::identity(dim));
    if (base == 0) {
        for (std::size_t i = 0; i < grid.steps(); ++i) out.frames.push_back(TruncatedOperator::identity(dim));
        return out;
    }

    // I_alpha for every alpha, level by level; code(alpha) = alpha_1 base^{n-1} + code(alpha-hat).
    std::vector<std::vector<double>> integrals(top + 1);
    integrals[0] = {1.0};
    for (std::size_t lvl = 1; lvl <= top; ++lvl) integrals[lvl].assign(layout.level_size[lvl], 0.0);

    // B^alpha stored as columns of a dim^2 x total matrix when it fits in memory.
    constexpr double kProductBudget = 16.0 * 1024 * 1024;
    const bool precompute = static_cast<double>(layout.total) * static_cast<double>(dim * dim) <= kProductBudget;
    Matrix products;
    if (precompute) {
        products.resize(n * n, static_cast<Eigen::Index>(layout.total));
        std::size_t offset = 0;
        std::size_t prev_offset = 0;
        for (std::size_t lvl = 1; lvl <= top; ++lvl) {
            const std::size_t lower = layout.level_size[lvl - 1];
            for (std::size_t code = 0; code < layout.level_size[lvl]; ++code) {
                const Matrix& head = family.member(layout.letters[code / lower]).matrix();
                Eigen::Map<Matrix> dst(products.col(static_cast<Eigen::Index>(offset + code)).data(), n, n);
                if (lvl == 1) {
                    dst = head;
                } else {
                    Eigen::Map<const Matrix> tail(
                        products.col(static_cast<Eigen::Index>(prev_offset + code % lower)).data(), n, n);
                    dst.noalias() = head * tail;
                }
            }
            prev_offset = offset;
            offset += layout.level_size[lvl];
        }
    }

    std::vector<double> increments(base);
    auto advance = [&](std::size_t step) {
        for (std::size_t d = 0; d < base; ++d) {
            const std::size_t letter = layout.letters[d];
            increments[d] = letter == 0 ? dt : paths.increment(letter - 1, step);
        }
        for (std::size_t lvl = top; lvl >= 1; --lvl) {
            const std::size_t lower = layout.level_size[lvl - 1];
            auto& cur = integrals[lvl];
            const auto& prev = integrals[lvl - 1];
            for (std::size_t code = 0; code < cur.size(); ++code) {
                cur[code] += prev[code % lower] * increments[code / lower];
            }
        }
    };

    if (precompute) {
        constexpr std::size_t kBlock = 256;
        Matrix block(static_cast<Eigen::Index>(layout.total), static_cast<Eigen::Index>(kBlock));
        Vector identity_flat = Eigen::Map<const Vector>(identity_like(dim).data(), n * n);
        for (std::size_t start = 0; start < grid.steps(); start += kBlock) {
            const std::size_t count = std::min(kBlock, grid.steps() - start);
            for (std::size_t c = 0; c < count; ++c) {
                advance(start + c);
                std::size_t offset = 0;
                for (std::size_t lvl = 1; lvl <= top; ++lvl) {
                    for (std::size_t code = 0; code < integrals[lvl].size(); ++code) {
                        block(static_cast<Eigen::Index>(offset + code), static_cast<Eigen::Index>(c)) =
                            integrals[lvl][code];
                    }
                    offset += integrals[lvl].size();
                }
            }
            const Matrix frames = products * block.leftCols(static_cast<Eigen::Index>(count));
            for (std::size_t c = 0; c < count; ++c) {
                Vector flat = frames.col(static_cast<Eigen::Index>(c)) + identity_flat;
                out.frames.emplace_back(Matrix(Eigen::Map<const Matrix>(flat.data(), n, n)));
            }
        }
        return out;
    }

    // Nested evaluation F(p) = I_p Id + sum_d B_d F(p d), depth first.
    const Matrix ident = identity_like(dim);
    std::function<Matrix(std::size_t, std::size_t)> nested = [&](std::size_t lvl, std::size_t code) -> Matrix {
        Matrix acc = integrals[lvl][code] * ident;
        if (lvl == top) return acc;
        for (std::size_t d = 0; d < base; ++d) {
            acc.noalias() += family.member(layout.letters[d]).matrix() * nested(lvl + 1, code * base + d);
        }
        return acc;
    };
    for (std::size_t step = 0; step < grid.steps(); ++step) {
        advance(step);
        out.frames.emplace_back(nested(0, 0));
    }
    return out;
}

double chaos_tail_bound(double bound, double delta, int moment_l, int max_order) {
    if (bound < 0.0 || !(delta > 0.0) || moment_l < 1 || max_order < 0) {
        throw DomainError("chaos_tail_bound needs M >= 0, delta > 0, L >= 1, n_max >= 0");
    }
    if (bound == 0.0) return 0.0;
    const double two_l = 2.0 * moment_l;
    const double c_l = two_l / (two_l - 1.0);
    const double log_base = std::log(bound * c_l);
    const double log_delta = std::log(delta);
    const double prefactor = std::exp((0.5 - 1.0 / two_l) * log_delta);
    auto log_term = [&](double n) {
        return n * log_base + (std::max(0.0, two_l * n * log_delta) - std::lgamma(n + 1.0)) / two_l;
    };
    double sum = 0.0;
    double prev_log = -INFINITY;
    for (long n = max_order + 1; n < 100000000L; ++n) {
        const double lt = log_term(static_cast<double>(n));
        const double term = std::exp(lt);
        sum += term;
        const bool decreasing = lt < prev_log;
        prev_log = lt;
        if (decreasing && term < 1e-16 * sum) break;
    }
    return prefactor * sum;
}

// ---------------------------------------------------------------------------
// Closed-form commutative flows

namespace {

FlowSample exponent_flow(const OperatorFamily& family, const WienerPaths& paths, const Matrix& drift,
                         SolverTag tag) {
    require_commuting(family);
    require_paths(family, paths, family.noise_count());
    const TimeGrid& grid = paths.grid();
    FlowSample out{grid, {}, tag, paths.seed(), paths.origin()};
    out.frames.reserve(grid.steps() + 1);
    out.frames.push_back(TruncatedOperator::identity(family.dim()));
    for (std::size_t i = 1; i <= grid.steps(); ++i) {
        Matrix exponent = (grid.point(i) - grid.start()) * drift;
        for (std::size_t k = 0; k < family.noise_count(); ++k) {
            exponent += paths.value(k, i) * family.noise()[k].matrix();
        }
        out.frames.emplace_back(matrix_exponential(exponent));
    }
    return out;
}

}  // namespace

FlowSample commutative_ito_flow(const OperatorFamily& family, const WienerPaths& paths) {
    const Matrix drift = family.drift().matrix() - 0.5 * family.noise_square_sum().matrix();
    return exponent_flow(family, paths, drift, SolverTag::commutative_ito);
}

FlowSample commutative_strat_flow(const OperatorFamily& family, const WienerPaths& paths) {
    return exponent_flow(family, paths, family.drift().matrix(), SolverTag::commutative_strat);
}

FlowSample inverse_flow(const OperatorFamily& family, const WienerPaths& paths) {
    const Matrix dual_drift = (-family.drift().matrix() + family.noise_square_sum().matrix()).transpose();
    std::vector<TruncatedOperator> dual_noise;
    dual_noise.reserve(family.noise_count());
    for (const auto& b : family.noise()) dual_noise.emplace_back(Matrix(-b.matrix().transpose()));
    const OperatorFamily dual(TruncatedOperator(dual_drift), std::move(dual_noise));
    FlowSample out = euler_flow(std::nullopt, dual, paths);
    out.solver = SolverTag::inverse_dual;
    return out;
}

// ---------------------------------------------------------------------------
// Yosida / Doss-Sussmann

TruncatedOperator yosida(std::span<const double> decay, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("Yosida parameter must be > 0");
    if (decay.empty()) throw DomainError("Yosida approximation needs a nonempty spectrum");
    std::vector<double> entries(decay.size());
    for (std::size_t j = 0; j < decay.size(); ++j) {
        if (!(decay[j] >= 0.0)) throw DomainError("diagonal generator spectrum must be <= 0");
        entries[j] = -lambda * decay[j] / (lambda + decay[j]);
    }
    return TruncatedOperator::diagonal(entries);
}

FlowSample doss_sussmann_flow(std::span<const double> decay, const OperatorFamily& noise, const WienerPaths& paths,
                              double lambda) {
    if (noise.drift().matrix().cwiseAbs().maxCoeff() != 0.0) {
        throw DomainError("Doss-Sussmann construction takes a noise-only family (zero drift)");
    }
    if (decay.size() != noise.dim()) throw DimensionMismatch("spectrum length differs from family dim");
    require_commuting(noise);
    require_paths(noise, paths, noise.noise_count());

    const Matrix generator = yosida(decay, lambda).matrix();
    const Matrix correction = 0.5 * noise.noise_square_sum().matrix();
    const Matrix coefficient = generator - correction;
    const TimeGrid& grid = paths.grid();
    const double dt = grid.dt();

    auto exponent_at = [&](auto&& value_of) {
        Matrix e = Matrix::Zero(static_cast<Eigen::Index>(noise.dim()), static_cast<Eigen::Index>(noise.dim()));
        for (std::size_t k = 0; k < noise.noise_count(); ++k) e += value_of(k) * noise.noise()[k].matrix();
        return e;
    };
    auto rhs_matrix = [&](const Matrix& exponent) -> Matrix {
        return matrix_exponential(Matrix(-exponent)) * coefficient * matrix_exponential(exponent);
    };

    FlowSample out{grid, {}, SolverTag::doss_sussmann, paths.seed(), paths.origin()};
    out.frames.reserve(grid.steps() + 1);
    out.frames.push_back(TruncatedOperator::identity(noise.dim()));

    Matrix g = identity_like(noise.dim());
    Matrix exponent_left = exponent_at([&](std::size_t) { return 0.0; });
    Matrix f_left = rhs_matrix(exponent_left);
    for (std::size_t i = 0; i < grid.steps(); ++i) {
        const Matrix exponent_mid =
            exponent_at([&](std::size_t k) { return 0.5 * (paths.value(k, i) + paths.value(k, i + 1)); });
        const Matrix exponent_right = exponent_at([&](std::size_t k) { return paths.value(k, i + 1); });
        const Matrix f_mid = rhs_matrix(exponent_mid);
        const Matrix f_right = rhs_matrix(exponent_right);
        const Matrix k1 = f_left * g;
        const Matrix k2 = f_mid * (g + 0.5 * dt * k1);
        const Matrix k3 = f_mid * (g + 0.5 * dt * k2);
        const Matrix k4 = f_right * (g + dt * k3);
        g += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.frames.emplace_back(Matrix(matrix_exponential(exponent_right) * g));
        f_left = f_right;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cocycle defect / export

double cocycle_defect(const FlowSample& flow, std::size_t i, std::size_t j, std::size_t l,
                      const FlowSample& restart) {
    if (flow.seed != restart.seed) throw SeedMismatch("restart flow was driven by a different seed");
    if (!(i <= j && j <= l)) throw DomainError("cocycle indices must satisfy i <= j <= l");
    if (flow.origin != i) throw DomainError("flow must start at grid index i");
    if (restart.origin != j) throw DomainError("restart flow must start at grid index j");
    if (l - i >= flow.frames.size() || l - j >= restart.frames.size()) throw DomainError("index l beyond the grid");
    const Matrix composed = restart.frames[l - j].matrix() * flow.frames[j - i].matrix();
    return operator_norm(Matrix(composed - flow.frames[l - i].matrix()));
}

void write_frames_csv(const FlowSample& flow, std::ostream& out) {
    const std::size_t dim = flow.frames.front().dim();
    std::vector<std::string> header{"t"};
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) header.push_back("x_" + std::to_string(r + 1) + "_" + std::to_string(c + 1));
    }
    csv::write_row(out, header);
    std::vector<double> row(dim * dim + 1);
    for (std::size_t i = 0; i < flow.frames.size(); ++i) {
        row[0] = flow.grid.point(i);
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) row[1 + r * dim + c] = flow.frames[i](r, c);
        }
        csv::write_row(out, row);
    }
}

}  // namespace stochflow
