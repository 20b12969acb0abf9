#pragma once

// JSON and SVG output for computed partitions.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "partition.hpp"

namespace neumann {

/// Fixed-point text with at most `digits` decimals, trailing zeros removed.
inline std::string format_number(double v, int digits = 4)
{
    const double scale = std::pow(10.0, digits);
    double r = std::round(v * scale) / scale;
    if (r == 0.0) r = 0.0;  // no "-0"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, r);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    return s;
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
    out << text;
    out.close();
    if (!out) throw std::ios_base::failure("failed writing " + path);
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json counts_json(const DomainCounts& c)
{
    return {{"total", c.total}, {"inner", c.inner}, {"boundary", c.boundary}};
}

inline DomainCounts counts_from_json(const nlohmann::json& j)
{
    const auto& c = j.contains("counts") ? j.at("counts") : j;
    return {c.at("total").get<int>(), c.at("inner").get<int>(), c.at("boundary").get<int>()};
}

inline nlohmann::json report_json(const VerificationReport& rep)
{
    nlohmann::json clauses = nlohmann::json::array();
    for (const auto& c : rep.clauses)
        clauses.push_back({{"clause", c.name}, {"passed", c.passed}, {"margin", c.margin}, {"witness", c.witness}});
    return {{"passed", rep.passed()}, {"clauses", clauses}};
}

/// {mode, lambda, counts, domains, lines} plus an optional verification block.
template <ScalarField F>
nlohmann::json partition_json(const std::string& mode, double lambda, const PartitionRun<F>& run,
                              const VerificationReport* report = nullptr)
{
    const auto& P = run.partition;
    nlohmann::json j;
    j["mode"] = mode;
    j["lambda"] = lambda;
    j["resolution"] = P.resolution;
    j["counts"] = counts_json({P.total(), P.inner(), P.boundary()});
    nlohmann::json domains = nlohmann::json::array();
    for (const auto& d : P.domains)
        domains.push_back({{"id", d.id}, {"class", to_string(d.cls)}, {"area", d.area}, {"sign", d.sign}});
    j["domains"] = domains;
    nlohmann::json polylines = nlohmann::json::array();
    for (const auto& pl : run.lines.polylines) {
        nlohmann::json line = nlohmann::json::array();
        for (const auto& p : pl) line.push_back({p.x, p.y});
        polylines.push_back(line);
    }
    nlohmann::json circles = nlohmann::json::array();
    for (const auto& c : run.lines.critical_curves)
        circles.push_back({{"center", {c.center.x, c.center.y}}, {"radius", c.radius}});
    j["lines"] = {{"length_total", run.lines.total_length()},
                  {"polylines", polylines},
                  {"circles", circles},
                  {"neumann_boundary", run.lines.neumann_boundary}};
    if (report) j["verification"] = report_json(*report);
    return j;
}

// ---------------------------------------------------------------------------
// SVG

struct SvgOptions {
    double pixels_per_unit = 400.0;
    bool nodal_lines = true;
};

namespace detail {

// Nodal set of the cell-centre samples by marching squares, one segment per
// crossed cell edge pair.
inline std::vector<std::pair<Point, Point>> nodal_segments(const NeumannPartition& P, const std::vector<double>& v,
                                                           const std::vector<std::uint8_t>& ok)
{
    std::vector<std::pair<Point, Point>> segs;
    auto at = [&](int i, int j) { return std::size_t(j) * P.nx + i; };
    for (int j = 0; j + 1 < P.ny; ++j)
        for (int i = 0; i + 1 < P.nx; ++i) {
            const std::size_t c[4] = {at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
            if (!(ok[c[0]] && ok[c[1]] && ok[c[2]] && ok[c[3]])) continue;
            const Point q[4] = {P.center(i, j), P.center(i + 1, j), P.center(i + 1, j + 1), P.center(i, j + 1)};
            std::vector<Point> hits;
            for (int e = 0; e < 4; ++e) {
                const double a = v[c[e]], b = v[c[(e + 1) % 4]];
                if ((a > 0.0) == (b > 0.0)) continue;
                const double t = a / (a - b);
                hits.push_back(q[e] + t * (q[(e + 1) % 4] - q[e]));
            }
            if (hits.size() == 2) segs.push_back({hits[0], hits[1]});
            else if (hits.size() == 4) {
                segs.push_back({hits[0], hits[1]});
                segs.push_back({hits[2], hits[3]});
            }
        }
    return segs;
}

inline std::string disk_path(const Point& c, double r)
{
    std::ostringstream os;
    os << "M" << format_number(c.x + r) << "," << format_number(c.y) << "A" << format_number(r) << ","
       << format_number(r) << " 0 1 1 " << format_number(c.x - r) << "," << format_number(c.y) << "A"
       << format_number(r) << "," << format_number(r) << " 0 1 1 " << format_number(c.x + r) << ","
       << format_number(c.y) << "Z";
    return os.str();
}

} // namespace detail

template <ScalarField F>
std::string render_svg(const F& field, const PartitionRun<F>& run, const SvgOptions& opt = {})
{
    const auto& P = run.partition;
    const Domain& dom = field.domain();
    const Point lo = dom.lower_corner(), hi = dom.upper_corner();
    const double w = hi.x - lo.x, hgt = hi.y - lo.y;
    const double stroke = 0.004 * std::max(w, hgt);

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_number(w * opt.pixels_per_unit, 0)
       << "\" height=\"" << format_number(hgt * opt.pixels_per_unit, 0) << "\" viewBox=\"" << format_number(lo.x) << " "
       << format_number(lo.y) << " " << format_number(w) << " " << format_number(hgt) << "\">\n";
    os << "<style>\n"
       << ".boundary-domain{fill:#8a8a8a;stroke:none}\n"
       << ".inner-domain{fill:#d9d9d9;stroke:none}\n"
       << ".neumann-line{fill:none;stroke:#000;stroke-width:" << format_number(stroke) << "}\n"
       << ".critical-circle{fill:none;stroke:#000;stroke-width:" << format_number(stroke) << "}\n"
       << ".nodal-line{fill:none;stroke:#000;stroke-width:" << format_number(0.6 * stroke)
       << ";stroke-dasharray:" << format_number(4 * stroke) << "," << format_number(3 * stroke) << "}\n"
       << ".outline{fill:none;stroke:#000;stroke-width:" << format_number(stroke) << "}\n"
       << "</style>\n";
    if (dom.is_disk())
        os << "<defs><clipPath id=\"domain\"><path d=\"" << detail::disk_path({0.0, 0.0}, 1.0) << "\"/></clipPath></defs>\n";
    // Flip y so the picture has the usual orientation.
    os << "<g transform=\"matrix(1 0 0 -1 0 " << format_number(lo.y + hi.y) << ")\">\n";
    os << "<g" << (dom.is_disk() ? " clip-path=\"url(#domain)\"" : "") << ">\n";
    for (const auto& d : P.domains) {
        std::ostringstream path;
        for (int j = 0; j < P.ny; ++j) {
            int i = 0;
            while (i < P.nx) {
                if (P.cell_domain[std::size_t(j) * P.nx + i] != d.id) {
                    ++i;
                    continue;
                }
                const int start = i;
                while (i < P.nx && P.cell_domain[std::size_t(j) * P.nx + i] == d.id) ++i;
                const double x0 = P.origin.x + start * P.h, y0 = P.origin.y + j * P.h;
                path << "M" << format_number(x0) << "," << format_number(y0) << "h" << format_number((i - start) * P.h)
                     << "v" << format_number(P.h) << "h" << format_number(-(i - start) * P.h) << "Z";
            }
        }
        os << "<path class=\"" << (d.cls == DomainClass::boundary ? "boundary-domain" : "inner-domain") << "\" d=\""
           << path.str() << "\"/>\n";
    }
    os << "</g>\n";

    if (opt.nodal_lines) {
        std::vector<double> v(std::size_t(P.nx) * P.ny, 0.0);
        std::vector<std::uint8_t> ok(v.size(), 0);
        for (int j = 0; j < P.ny; ++j)
            for (int i = 0; i < P.nx; ++i) {
                const Point p = P.center(i, j);
                if (dom.signed_distance(p) >= 0.0) continue;
                v[std::size_t(j) * P.nx + i] = field.jet(p).value;
                ok[std::size_t(j) * P.nx + i] = 1;
            }
        std::ostringstream path;
        for (const auto& [a, b] : detail::nodal_segments(P, v, ok))
            path << "M" << format_number(a.x) << "," << format_number(a.y) << "L" << format_number(b.x) << ","
                 << format_number(b.y);
        os << "<path class=\"nodal-line\" d=\"" << path.str() << "\"/>\n";
    }

    for (const auto& pl : run.lines.polylines) {
        std::ostringstream path;
        std::string last;
        for (std::size_t i = 0; i < pl.size(); ++i) {
            const std::string xy = format_number(pl[i].x) + "," + format_number(pl[i].y);
            if (xy == last) continue;
            path << (i == 0 ? "M" : "L") << xy;
            last = xy;
        }
        os << "<path class=\"neumann-line\" d=\"" << path.str() << "\"/>\n";
    }
    for (const auto& c : run.lines.critical_curves)
        os << "<circle class=\"critical-circle\" cx=\"" << format_number(c.center.x) << "\" cy=\""
           << format_number(c.center.y) << "\" r=\"" << format_number(c.radius) << "\"/>\n";

    const std::string outline_class = dom.has_neumann() ? "neumann-line" : "outline";
    if (dom.is_disk())
        os << "<path class=\"" << outline_class << "\" d=\"" << detail::disk_path({0.0, 0.0}, 1.0) << "\"/>\n";
    else
        os << "<path class=\"" << outline_class << "\" d=\"M0,0H" << format_number(w) << "V" << format_number(hgt)
           << "H0Z\"/>\n";
    os << "</g>\n</svg>\n";
    return os.str();
}

} // namespace neumann
