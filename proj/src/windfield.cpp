#include "cruise/windfield.hpp"

#include "cruise/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace cruise {

namespace {

constexpr double kInv2Pi = 1.0 / (2.0 * kPi);

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

WindSample eval_uniform(const UniformFlow& u) { return {Vec2(u.u, u.v), Mat2::Zero()}; }

WindSample eval_vortex(const Vortex& p, const Vec2& x) {
    const double dx = x.x() - p.center.x();
    const double dy = x.y() - p.center.y();
    const double s = dx * dx + dy * dy + p.core_radius * p.core_radius;
    const double k = p.circulation * kInv2Pi;
    const double s2 = s * s;
    WindSample out;
    out.velocity = Vec2(-k * dy / s, k * dx / s);
    const double a = k * 2.0 * dx * dy / s2;
    out.jacobian << a, k * (-1.0 / s + 2.0 * dy * dy / s2),
                    k * (1.0 / s - 2.0 * dx * dx / s2), -a;
    return out;
}

WindSample eval_dipole(const Dipole& p, const Vec2& x) {
    const double dx = x.x() - p.center.x();
    const double dy = x.y() - p.center.y();
    const double mx = p.moment.x();
    const double my = p.moment.y();
    const double s = dx * dx + dy * dy + p.radius * p.radius;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double n = mx * dy - my * dx;
    WindSample out;
    out.velocity = kInv2Pi * Vec2(mx / s - 2.0 * dy * n / s2, my / s + 2.0 * dx * n / s2);
    const double a = kInv2Pi * ((-2.0 * mx * dx + 2.0 * my * dy) / s2 + 8.0 * dx * dy * n / s3);
    out.jacobian << a, kInv2Pi * ((-4.0 * mx * dy - 2.0 * n) / s2 + 8.0 * dy * dy * n / s3),
                    kInv2Pi * ((-4.0 * my * dx + 2.0 * n) / s2 - 8.0 * dx * dx * n / s3), -a;
    return out;
}

WindSample eval_source(const SourceSink& p, const Vec2& x) {
    const double dx = x.x() - p.center.x();
    const double dy = x.y() - p.center.y();
    const double s = dx * dx + dy * dy + p.radius * p.radius;
    const double k = p.strength * kInv2Pi;
    const double s2 = s * s;
    WindSample out;
    out.velocity = Vec2(k * dx / s, k * dy / s);
    const double off = -k * 2.0 * dx * dy / s2;
    out.jacobian << k * (1.0 / s - 2.0 * dx * dx / s2), off,
                    off, k * (1.0 / s - 2.0 * dy * dy / s2);
    return out;
}

} // namespace

WindSample eval_primitive(const WindPrimitive& prim, const Vec2& p) {
    return std::visit(overloaded{
                          [](const UniformFlow& u) { return eval_uniform(u); },
                          [&](const Vortex& v) { return eval_vortex(v, p); },
                          [&](const Dipole& d) { return eval_dipole(d, p); },
                          [&](const SourceSink& s) { return eval_source(s, p); },
                      },
                      prim);
}

int parameter_count(const WindPrimitive& prim) {
    return std::visit(overloaded{
                          [](const UniformFlow&) { return 2; },
                          [](const Vortex&) { return 4; },
                          [](const Dipole&) { return 5; },
                          [](const SourceSink&) { return 4; },
                      },
                      prim);
}

WindField::WindField(std::vector<WindPrimitive> primitives) : primitives_(std::move(primitives)) {}

Vec2 WindField::velocity(const Vec2& p) const {
    Vec2 w = Vec2::Zero();
    for (const auto& prim : primitives_) w += eval_primitive(prim, p).velocity;
    return w;
}

Mat2 WindField::jacobian(const Vec2& p) const {
    Mat2 j = Mat2::Zero();
    for (const auto& prim : primitives_) j += eval_primitive(prim, p).jacobian;
    return j;
}

WindSample WindField::sample(const Vec2& p) const {
    WindSample out{Vec2::Zero(), Mat2::Zero()};
    for (const auto& prim : primitives_) {
        const WindSample s = eval_primitive(prim, p);
        out.velocity += s.velocity;
        out.jacobian += s.jacobian;
    }
    return out;
}

PrimitiveCounts WindField::counts() const {
    PrimitiveCounts c;
    for (const auto& prim : primitives_) {
        if (std::holds_alternative<Vortex>(prim)) ++c.vortices;
        if (std::holds_alternative<Dipole>(prim)) ++c.dipoles;
        if (std::holds_alternative<SourceSink>(prim)) ++c.sources;
    }
    return c;
}

int WindField::parameter_count() const {
    int n = 0;
    for (const auto& prim : primitives_) n += cruise::parameter_count(prim);
    return n;
}

WindField WindField::scaled(double factor) const {
    std::vector<WindPrimitive> out;
    out.reserve(primitives_.size());
    for (const auto& prim : primitives_) {
        out.push_back(std::visit(overloaded{
                                     [&](UniformFlow u) -> WindPrimitive {
                                         u.u *= factor;
                                         u.v *= factor;
                                         return u;
                                     },
                                     [&](Vortex v) -> WindPrimitive {
                                         v.circulation *= factor;
                                         return v;
                                     },
                                     [&](Dipole d) -> WindPrimitive {
                                         d.moment *= factor;
                                         return d;
                                     },
                                     [&](SourceSink s) -> WindPrimitive {
                                         s.strength *= factor;
                                         return s;
                                     },
                                 },
                                 prim));
    }
    return WindField(std::move(out));
}

WindField WindField::operator+(const WindField& other) const {
    std::vector<WindPrimitive> out = primitives_;
    out.insert(out.end(), other.primitives_.begin(), other.primitives_.end());
    return WindField(std::move(out));
}

VecX WindField::parameters() const {
    VecX theta(parameter_count());
    Eigen::Index i = 0;
    for (const auto& prim : primitives_) {
        std::visit(overloaded{
                       [&](const UniformFlow& u) { theta.segment<2>(i) << u.u, u.v; },
                       [&](const Vortex& v) {
                           theta.segment<4>(i) << v.circulation, v.center.x(), v.center.y(), v.core_radius;
                       },
                       [&](const Dipole& d) {
                           theta.segment<5>(i) << d.moment.x(), d.moment.y(), d.center.x(), d.center.y(),
                               d.radius;
                       },
                       [&](const SourceSink& s) {
                           theta.segment<4>(i) << s.strength, s.center.x(), s.center.y(), s.radius;
                       },
                   },
                   prim);
        i += cruise::parameter_count(prim);
    }
    return theta;
}

WindField WindField::with_parameters(const VecX& theta) const {
    if (theta.size() != parameter_count())
        throw DomainError("parameter vector size does not match field layout");
    std::vector<WindPrimitive> out;
    out.reserve(primitives_.size());
    Eigen::Index i = 0;
    for (const auto& prim : primitives_) {
        out.push_back(std::visit(overloaded{
                                     [&](const UniformFlow&) -> WindPrimitive {
                                         return UniformFlow{theta[i], theta[i + 1]};
                                     },
                                     [&](const Vortex&) -> WindPrimitive {
                                         return Vortex{theta[i], Vec2(theta[i + 1], theta[i + 2]), theta[i + 3]};
                                     },
                                     [&](const Dipole&) -> WindPrimitive {
                                         return Dipole{Vec2(theta[i], theta[i + 1]),
                                                       Vec2(theta[i + 2], theta[i + 3]), theta[i + 4]};
                                     },
                                     [&](const SourceSink&) -> WindPrimitive {
                                         return SourceSink{theta[i], Vec2(theta[i + 1], theta[i + 2]),
                                                           theta[i + 3]};
                                     },
                                 },
                                 prim));
        i += cruise::parameter_count(prim);
    }
    return WindField(std::move(out));
}

void WindField::validate() const {
    int idx = 0;
    for (const auto& prim : primitives_) {
        const bool ok = std::visit(overloaded{
                                       [](const UniformFlow& u) { return std::isfinite(u.u) && std::isfinite(u.v); },
                                       [](const Vortex& v) { return v.core_radius > 0.0; },
                                       [](const Dipole& d) { return d.radius > 0.0; },
                                       [](const SourceSink& s) { return s.radius > 0.0; },
                                   },
                                   prim);
        if (!ok) {
            std::ostringstream os;
            os << "wind.primitives[" << idx << "]";
            throw ValidationError(os.str(), "regularization radius must be > 0");
        }
        ++idx;
    }
}

namespace {

template <class Fn>
void for_each_grid_point(const Domain& domain, int grid_n, Fn&& fn) {
    for (int i = 0; i < grid_n; ++i) {
        const double x = domain.x_min + domain.width() * i / (grid_n - 1);
        for (int j = 0; j < grid_n; ++j) {
            const double y = domain.y_min + domain.height() * j / (grid_n - 1);
            fn(Vec2(x, y));
        }
    }
}

} // namespace

double divergence_scan(const WindField& field, const Domain& domain, int grid_n) {
    if (domain.empty()) throw DomainError("divergence_scan: empty domain");
    if (grid_n < 2) throw DomainError("divergence_scan: grid_n must be >= 2");
    double worst = 0.0;
    for_each_grid_point(domain, grid_n, [&](const Vec2& p) {
        worst = std::max(worst, std::abs(field.jacobian(p).trace()));
    });
    return worst;
}

double grid_sup_norm(const WindField& field, const Domain& domain, int grid_n) {
    if (domain.empty()) throw DomainError("grid_sup_norm: empty domain");
    if (grid_n < 2) throw DomainError("grid_sup_norm: grid_n must be >= 2");
    double sup = 0.0;
    for_each_grid_point(domain, grid_n, [&](const Vec2& p) { sup = std::max(sup, field.velocity(p).norm()); });
    return sup;
}

WindField sample_random_field(std::uint64_t seed, double max_speed, const PrimitiveCounts& counts,
                              const Domain& domain) {
    if (!(max_speed > 0.0)) throw DomainError("sample_random_field: max_speed must be > 0");
    if (domain.empty()) throw DomainError("sample_random_field: empty domain");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double side = std::max(domain.width(), domain.height());
    std::uniform_real_distribution<double> cx(domain.x_min - 0.1 * domain.width(),
                                              domain.x_max + 0.1 * domain.width());
    std::uniform_real_distribution<double> cy(domain.y_min - 0.1 * domain.height(),
                                              domain.y_max + 0.1 * domain.height());
    std::uniform_real_distribution<double> radius(0.05 * side, 0.20 * side);

    std::vector<WindPrimitive> prims;
    prims.push_back(UniformFlow{unit(rng), unit(rng)});
    // Raw strengths give O(1) peak speeds; the whole field is rescaled below.
    for (int k = 0; k < counts.vortices; ++k) {
        const Vec2 c(cx(rng), cy(rng));
        const double r = radius(rng);
        prims.push_back(Vortex{unit(rng) * 4.0 * kPi * r, c, r});
    }
    for (int k = 0; k < counts.dipoles; ++k) {
        const Vec2 c(cx(rng), cy(rng));
        const double r = radius(rng);
        const Vec2 mu(unit(rng), unit(rng));
        prims.push_back(Dipole{mu * 2.0 * kPi * r * r, c, r});
    }
    for (int k = 0; k < counts.sources; ++k) {
        const Vec2 c(cx(rng), cy(rng));
        const double r = radius(rng);
        prims.push_back(SourceSink{unit(rng) * 4.0 * kPi * r, c, r});
    }
    WindField raw(std::move(prims));
    const double sup = grid_sup_norm(raw, domain, 200);
    if (!(sup > 0.0)) throw DomainError("sample_random_field: degenerate zero field");
    return raw.scaled(max_speed / sup);
}

namespace {

// Radii are fitted in log space so every trial point keeps R0 > 0.
VecX to_internal(const WindField& layout, const VecX& theta) {
    VecX z = theta;
    Eigen::Index i = 0;
    for (const auto& prim : layout.primitives()) {
        const int n = parameter_count(prim);
        if (!std::holds_alternative<UniformFlow>(prim)) z[i + n - 1] = std::log(theta[i + n - 1]);
        i += n;
    }
    return z;
}

VecX from_internal(const WindField& layout, const VecX& z) {
    VecX theta = z;
    Eigen::Index i = 0;
    for (const auto& prim : layout.primitives()) {
        const int n = parameter_count(prim);
        if (!std::holds_alternative<UniformFlow>(prim)) theta[i + n - 1] = std::exp(z[i + n - 1]);
        i += n;
    }
    return theta;
}

WindField layout_for(const PrimitiveCounts& counts) {
    std::vector<WindPrimitive> prims{UniformFlow{}};
    for (int k = 0; k < counts.vortices; ++k) prims.push_back(Vortex{});
    for (int k = 0; k < counts.dipoles; ++k) prims.push_back(Dipole{});
    for (int k = 0; k < counts.sources; ++k) prims.push_back(SourceSink{});
    return WindField(std::move(prims));
}

// Start point: uniform part from the sample mean, each regularized primitive
// placed on a distinct cell of a coarse lattice over the sample bounding box.
WindField seeded_start(const WindField& layout, std::span<const WindSamplePoint> samples, std::mt19937_64& rng) {
    Vec2 lo = samples.front().position;
    Vec2 hi = lo;
    Vec2 mean = Vec2::Zero();
    double speed = 0.0;
    for (const auto& s : samples) {
        lo = lo.cwiseMin(s.position);
        hi = hi.cwiseMax(s.position);
        mean += s.velocity;
        speed = std::max(speed, s.velocity.norm());
    }
    mean /= static_cast<double>(samples.size());
    const Vec2 span = (hi - lo).cwiseMax(1.0);
    const double side = span.maxCoeff();
    constexpr int cells = 4;
    std::vector<int> lattice(cells * cells);
    for (int k = 0; k < cells * cells; ++k) lattice[k] = k;
    std::shuffle(lattice.begin(), lattice.end(), rng);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    std::vector<WindPrimitive> prims;
    int slot = 0;
    for (const auto& prim : layout.primitives()) {
        const int cell = lattice[slot % lattice.size()];
        const Vec2 c = lo + Vec2(((cell % cells) + 0.5) / cells * span.x(), ((cell / cells) + 0.5) / cells * span.y());
        const double r = 0.15 * side;
        if (std::holds_alternative<UniformFlow>(prim)) {
            prims.push_back(UniformFlow{mean.x(), mean.y()});
            continue;
        }
        ++slot;
        const double a = 0.5 * speed * unit(rng);
        if (std::holds_alternative<Vortex>(prim)) prims.push_back(Vortex{a * 4.0 * kPi * r, c, r});
        if (std::holds_alternative<Dipole>(prim))
            prims.push_back(Dipole{Vec2(a, 0.5 * speed * unit(rng)) * 2.0 * kPi * r * r, c, r});
        if (std::holds_alternative<SourceSink>(prim)) prims.push_back(SourceSink{a * 4.0 * kPi * r, c, r});
    }
    return WindField(std::move(prims));
}

} // namespace

WindFitResult fit_wind_field(std::span<const WindSamplePoint> samples, const PrimitiveCounts& counts,
                             const WindFitOptions& options) {
    const int n_params = counts.parameter_count();
    if (static_cast<int>(samples.size()) < n_params) {
        std::ostringstream os;
        os << "fit_wind_field: " << samples.size() << " samples for " << n_params << " parameters";
        throw DomainError(os.str());
    }
    const WindField layout = options.initial ? *options.initial : layout_for(counts);
    if (layout.parameter_count() != n_params)
        throw DomainError("fit_wind_field: initial field layout does not match counts");

    double scale = 0.0;
    for (const auto& s : samples) scale = std::max(scale, s.velocity.norm());
    scale = std::max(scale, 1e-12);

    const ResidualFunction residual = [&](const VecX& z) {
        const WindField f = layout.with_parameters(from_internal(layout, z));
        VecX r(2 * samples.size());
        for (std::size_t k = 0; k < samples.size(); ++k)
            r.segment<2>(2 * k) = (f.velocity(samples[k].position) - samples[k].velocity) / scale;
        return r;
    };

    LeastSquaresOptions lm;
    lm.max_iterations = options.max_iterations;
    lm.step_tolerance = options.tolerance;
    lm.residual_tolerance = 0.0;

    std::mt19937_64 rng(options.seed);
    WindFitResult best;
    best.rms_residual = std::numeric_limits<double>::infinity();
    const int starts = std::max(1, options.starts);
    for (int s = 0; s < starts; ++s) {
        const WindField start = (s == 0 && options.initial) ? *options.initial : seeded_start(layout, samples, rng);
        const LeastSquaresResult res = levenberg_marquardt(residual, to_internal(layout, start.parameters()), lm);
        if (!std::isfinite(res.norm)) continue;
        const double rms = res.norm * scale / std::sqrt(static_cast<double>(samples.size()));
        if (rms < best.rms_residual) {
            best.field = layout.with_parameters(from_internal(layout, res.x));
            best.rms_residual = rms;
            best.iterations = res.iterations;
            best.converged = res.converged;
        }
    }
    if (!std::isfinite(best.rms_residual)) {
        best.field = layout;
        best.message = "no start produced a finite residual";
    } else if (!best.converged) {
        best.message = "iteration cap reached; best-so-far parameters returned";
    }
    return best;
}

} // namespace cruise
