#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lcap/area_tracer.hpp"
#include "lcap/capacity.hpp"
#include "lcap/optimality.hpp"

namespace lcap {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Hash of a resolved configuration; object keys are serialized sorted, so
/// equal configurations hash equally.
inline std::string config_hash(const nlohmann::json& resolved) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(resolved.dump())));
    return buf;
}

/// Provenance appended to every CSV as a trailing comment line, so the header
/// stays on the first line.
struct OutputStamp {
    std::uint64_t seed = 0;
    std::string config_hash;
};

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::string num(double v) { return fmt("%.12g", v); }

inline void stamp(std::ostream& os, const OutputStamp& s) {
    os << "# seed=" << s.seed << " config_hash=" << s.config_hash << '\n';
}

} // namespace detail

/// Boundary polyline as `k,x,y`, full precision so the area can be recomputed
/// from the file.
inline void write_trace_csv(std::ostream& os, const BoundaryTrace& trace, const OutputStamp& stamp) {
    os << "k,x,y\n";
    for (std::size_t k = 0; k < trace.vertices.size(); ++k)
        os << k << ',' << detail::fmt("%.17g", trace.vertices[k].x) << ',' << detail::fmt("%.17g", trace.vertices[k].y)
           << '\n';
    detail::stamp(os, stamp);
}

inline nlohmann::json trace_summary(const BoundaryTrace& trace) {
    return {{"area", trace.area},
            {"steps", trace.steps},
            {"closed", trace.closed},
            {"dot_area", trace.dot_area},
            {"dt", trace.dt},
            {"closure_tol", trace.closure_tol},
            {"max_level_residual", trace.max_level_residual},
            {"center", {trace.center.x, trace.center.y}}};
}

inline void write_capacity_csv(std::ostream& os, const std::vector<SweepRow>& rows, const OutputStamp& stamp) {
    os << "protocol,K,alpha,lambda,sigma,capacity,stderr,samples,seed\n";
    for (const SweepRow& r : rows) {
        const CapacityEstimate& e = r.estimate;
        os << to_string(r.protocol) << ',' << detail::num(r.K) << ',' << detail::num(r.alpha) << ','
           << detail::num(e.lambda_mean) << ',' << detail::num(e.sigma_mean) << ',' << detail::num(e.capacity) << ','
           << detail::num(e.std_error) << ',' << e.samples << ',' << e.seed << '\n';
    }
    detail::stamp(os, stamp);
}

inline void write_ratio_csv(std::ostream& os, const std::vector<RatioRow>& rows, const OutputStamp& stamp) {
    os << "K,alpha,protocol,ratio_to_triangular\n";
    for (const RatioRow& r : rows)
        os << detail::num(r.K) << ',' << detail::num(r.alpha) << ',' << to_string(r.protocol) << ','
           << detail::num(r.ratio_to_triangular) << '\n';
    detail::stamp(os, stamp);
}

struct OptimalityRow {
    ProtocolKind protocol;
    SirParams params;
    GradientMethod method;
    DeformationReport report;
};

inline void write_optimality_csv(std::ostream& os, const std::vector<OptimalityRow>& rows, const OutputStamp& stamp) {
    os << "protocol,K,alpha,method,sigma0,D_xx,D_xy,D_yx,D_yy,T_xx,T_xy,T_yx,T_yy,asymmetry,trace_residual,"
          "T_frobenius,truncation_radius,fd_step,perturbed\n";
    for (const OptimalityRow& r : rows) {
        const DeformationReport& d = r.report;
        os << to_string(r.protocol) << ',' << detail::num(r.params.K) << ',' << detail::num(r.params.alpha) << ','
           << to_string(r.method) << ',' << detail::num(d.sigma0);
        for (double v : {d.D.xx, d.D.xy, d.D.yx, d.D.yy, d.T.xx, d.T.xy, d.T.yx, d.T.yy}) os << ',' << detail::num(v);
        os << ',' << detail::num(d.asymmetry) << ',' << detail::num(d.trace_residual) << ','
           << detail::num(d.T.frobenius()) << ',' << detail::num(d.truncation_radius) << ','
           << detail::num(d.fd_step) << ',' << d.perturbed << '\n';
    }
    detail::stamp(os, stamp);
}

} // namespace lcap
