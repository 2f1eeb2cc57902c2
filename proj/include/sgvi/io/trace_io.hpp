#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "sgvi/solvers/trace.hpp"

namespace sgvi {

/// Which clock fills the `wall_seconds` column.
enum class TraceClock {
    passes,  // cumulative per-sample model passes: deterministic, byte-reproducible
    wall,    // measured seconds
};

namespace detail {
inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
}  // namespace detail

inline void write_trace_csv(std::ostream& out, const OptimizerTrace& trace, TraceClock clock = TraceClock::passes) {
    std::string s = "iter,wall_seconds,elbo,grad_norm,inner_iters\n";
    for (const auto& r : trace.records()) {
        s += std::to_string(r.iter);
        s += ',';
        s += clock == TraceClock::wall ? detail::fmt_g17(r.wall_seconds) : std::to_string(r.passes);
        s += ',' + detail::fmt_g17(r.elbo) + ',' + detail::fmt_g17(r.grad_norm) + ',' + std::to_string(r.inner_iters) + '\n';
    }
    out << s;
}

inline void write_trace_csv(const std::string& path, const OptimizerTrace& trace, TraceClock clock = TraceClock::passes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path + " for writing");
    write_trace_csv(f, trace, clock);
    if (!f) throw DataError("failed writing " + path);
}

}  // namespace sgvi
