#pragma once

// Command-line front end. run_command takes the arguments after the program
// name and returns the exit status: 0 success, 1 usage or I/O error,
// 2 verification failure.

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asymptotics.hpp"
#include "export.hpp"
#include "partition.hpp"

namespace neumann {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// "rect:a,b", "square:a", "disk" (Dirichlet) or "disk-neumann".
inline Domain parse_domain(const std::string& text)
{
    auto numbers = [&](const std::string& s) {
        std::vector<double> v;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::size_t used = 0;
            double x = 0.0;
            try {
                x = std::stod(item, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != item.size()) throw UsageError("bad number '" + item + "' in domain " + text);
            v.push_back(x);
        }
        return v;
    };
    if (text == "disk" || text == "disk-dirichlet") return Domain::disk(BoundaryCondition::dirichlet);
    if (text == "disk-neumann") return Domain::disk(BoundaryCondition::neumann);
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::vector<double> v = colon == std::string::npos ? std::vector<double>{} : numbers(text.substr(colon + 1));
    if (kind == "rect" && v.size() == 2) return Domain::rectangle(v[0], v[1]);
    if (kind == "square" && v.size() <= 1) {
        const double a = v.empty() ? 1.0 : v[0];
        return Domain::rectangle(a, a);
    }
    throw UsageError("unknown domain '" + text + "' (expected rect:a,b, square:a, disk or disk-neumann)");
}

struct RunConfig {
    std::string domain = "rect:1,1";
    int n = 1;
    int m = 1;
    std::string parity = "cos";
    std::optional<double> alpha;
    int resolution = 0;
    double rtol = 1e-9;
    double atol = 1e-12;
    double max_step = 0.05;
    std::uint64_t seed = 20240611;
    std::string json_path;
    std::string svg_path;
    bool verify = true;
    int threads = 0;

    ModeSpec mode() const
    {
        ModeSpec s;
        s.domain = parse_domain(domain);
        s.n = n;
        s.m = m;
        if (parity == "cos") s.parity = Parity::cosine;
        else if (parity == "sin") s.parity = Parity::sine;
        else throw UsageError("parity must be cos or sin");
        s.superposition_angle = alpha;
        return s;
    }

    PartitionConfig partition_config() const
    {
        if (!(rtol > 0.0 && atol > 0.0 && max_step > 0.0)) throw UsageError("tolerances must be positive");
        if (resolution < 0 || resolution > 8192) throw UsageError("resolution outside [0, 8192]");
        PartitionConfig c;
        c.resolution = resolution;
        c.seed = seed;
        c.flow.rtol = rtol;
        c.flow.atol = atol;
        c.flow.max_step = max_step;
        return c;
    }
};

namespace detail {

inline void add_mode_options(CLI::App* app, RunConfig& rc)
{
    app->add_option("--domain", rc.domain, "rect:a,b | square:a | disk | disk-neumann")->capture_default_str();
    app->add_option("--n", rc.n, "first mode index")->capture_default_str();
    app->add_option("--m", rc.m, "second mode index")->capture_default_str();
    app->add_option("--parity", rc.parity, "cos | sin (disk modes)")->capture_default_str();
    app->add_option("--alpha", rc.alpha, "superposition angle on a square");
}

inline void add_partition_options(CLI::App* app, RunConfig& rc)
{
    app->add_option("--resolution", rc.resolution, "grid cells per unit length (0 = automatic)");
    app->add_option("--rtol", rc.rtol, "flow relative tolerance")->capture_default_str();
    app->add_option("--atol", rc.atol, "flow absolute tolerance")->capture_default_str();
    app->add_option("--max-step", rc.max_step, "flow step cap in units of 1/sqrt(lambda)")->capture_default_str();
    app->add_option("--seed", rc.seed, "seed for the signature spot check")->capture_default_str();
}

inline std::string csv_number(double v)
{
    std::ostringstream os;
    os << std::setprecision(15) << v;
    return os.str();
}

inline Point parse_point(const std::string& s)
{
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw UsageError("expected x,y but got '" + s + "'");
    try {
        return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
    } catch (const std::exception&) {
        throw UsageError("expected x,y but got '" + s + "'");
    }
}

inline void print_report(std::ostream& out, const VerificationReport& rep)
{
    out << "verification: " << (rep.passed() ? "passed" : "FAILED") << "\n";
    for (const auto& c : rep.clauses) {
        out << "  [" << (c.passed ? "ok" : "FAIL") << "] " << c.name << " (margin " << c.margin << ")";
        if (!c.witness.empty()) out << " witness: " << c.witness;
        out << "\n";
    }
}

inline int cmd_modes(const RunConfig& rc, int count, std::ostream& out)
{
    const auto modes = enumerate_modes(parse_domain(rc.domain), count);
    out << "rank,n,m,parity,lambda\n";
    for (const auto& e : modes)
        out << e.rank << "," << e.mode.n << "," << e.mode.m << "," << to_string(e.mode.parity) << ","
            << csv_number(e.lambda) << "\n";
    return 0;
}

inline int cmd_zeros(int n, int count, std::ostream& out)
{
    if (count < 1) throw UsageError("--count must be positive");
    out << "n,m,j_nm,jprime_nm\n";
    for (int m = 1; m <= count; ++m)
        out << n << "," << m << "," << csv_number(bessel_zero(n, m).value) << ","
            << csv_number(bessel_prime_zero(n, m).value) << "\n";
    return 0;
}

inline int cmd_critical(const RunConfig& rc, std::ostream& out)
{
    const Eigenfunction f(rc.mode());
    const auto inv = find_critical_points(f);
    out << "x,y,value,kind,order,hess1,hess2\n";
    for (const auto& c : inv.points)
        out << csv_number(c.location.x) << "," << csv_number(c.location.y) << "," << csv_number(c.value) << ","
            << c.kind.name() << "," << c.kind.order << "," << csv_number(c.hessian_eigvals[0]) << ","
            << csv_number(c.hessian_eigvals[1]) << "\n";
    for (const auto& c : inv.curves)
        out << "# critical circle: center " << csv_number(c.center.x) << "," << csv_number(c.center.y) << " radius "
            << csv_number(c.radius) << (c.maximum ? " (maxima)" : " (minima)") << "\n";
    return inv.count_unresolved() == 0 ? 0 : 2;
}

inline int cmd_flow(const RunConfig& rc, const std::string& seed, const std::string& direction, std::ostream& out)
{
    const Eigenfunction f(rc.mode());
    const Point z0 = parse_point(seed);
    if (!f.domain().contains(z0, 1e-9)) throw UsageError("seed outside the domain");
    const auto inv = find_critical_points(f);
    FlowConfig fc;
    fc.rtol = rc.rtol;
    fc.atol = rc.atol;
    fc.max_step = rc.max_step;
    const GradientFlow<Eigenfunction> flow(f, inv, fc);
    std::vector<FlowSample> samples;
    std::vector<TerminationReason> ends;
    if (direction == "backward" || direction == "both") {
        const auto tr = flow.integrate(z0, Direction::backward);
        samples.assign(tr.samples.rbegin(), tr.samples.rend());
        ends.push_back(tr.termination);
    }
    if (direction == "forward" || direction == "both") {
        const auto tr = flow.integrate(z0, Direction::forward);
        samples.insert(samples.end(), tr.samples.begin() + (samples.empty() ? 0 : 1), tr.samples.end());
        ends.push_back(tr.termination);
    }
    if (ends.empty()) throw UsageError("direction must be forward, backward or both");
    out << "t,x,y,u\n";
    for (const auto& s : samples)
        out << csv_number(s.t) << "," << csv_number(s.z.x) << "," << csv_number(s.z.y) << "," << csv_number(s.u) << "\n";
    for (const auto& e : ends) {
        out << "# " << to_string(e.tag);
        if (e.index >= 0) out << " " << e.index;
        out << " at " << csv_number(e.z.x) << "," << csv_number(e.z.y) << "\n";
        if (e.tag == Termination::budget) return 2;
    }
    return 0;
}

inline int cmd_partition(const RunConfig& rc, bool require_svg, std::ostream& out)
{
    if (require_svg && rc.svg_path.empty()) throw UsageError("render needs --svg");
    const ModeSpec mode = rc.mode();
    const Eigenfunction f(mode);
    const PartitionConfig cfg = rc.partition_config();
    const auto run = compute_partition(f, cfg);
    const auto& P = run.partition;
    out << "mode: " << mode.describe() << "\n";
    out << "lambda: " << csv_number(f.lambda()) << "\n";
    out << "resolution: " << P.resolution << "\n";
    out << "counts: total " << P.total() << ", inner " << P.inner() << ", boundary " << P.boundary() << "\n";
    bool ok = true;
    if (has_closed_form(mode)) {
        const DomainCounts c = closed_form_count(mode);
        const bool match = c == DomainCounts{P.total(), P.inner(), P.boundary()};
        out << "formula: total " << c.total << ", inner " << c.inner << ", boundary " << c.boundary
            << (match ? " (match)" : " (MISMATCH)") << "\n";
        ok = ok && match;
    }
    std::optional<VerificationReport> rep;
    if (rc.verify) {
        rep = verify_partition(f, run, cfg);
        print_report(out, *rep);
        ok = ok && rep->passed();
    }
    if (!rc.json_path.empty())
        write_text(rc.json_path, partition_json(mode.describe(), f.lambda(), run, rep ? &*rep : nullptr).dump(2) + "\n");
    if (!rc.svg_path.empty()) write_text(rc.svg_path, render_svg(f, run));
    return ok ? 0 : 2;
}

inline int cmd_count_table(const RunConfig& rc, int nmax, int mmax, std::ostream& out)
{
    const Domain dom = parse_domain(rc.domain);
    if (nmax < 0 || mmax < 1) throw UsageError("--nmax and --mmax must be positive");
    const PartitionConfig cfg = rc.partition_config();
    out << "n,m,mu_formula,mu_labeled,match\n";
    bool all = true;
    for (int n = dom.is_rectangle() ? 1 : 0; n <= nmax; ++n)
        for (int m = 1; m <= mmax; ++m) {
            ModeSpec mode{dom, n, m};
            const CountReport r = count_domains(Eigenfunction(mode), cfg);
            const bool match = r.matches();
            all = all && match;
            out << n << "," << m << "," << (r.formula ? std::to_string(r.formula->total) : "") << ","
                << r.labelled.total << "," << (match ? "true" : "false") << "\n";
        }
    return all ? 0 : 2;
}

inline int cmd_constants(std::ostream& out)
{
    const ConstantReport rect = neumann_constant(Domain::Kind::rectangle);
    const ConstantReport disk = neumann_constant(Domain::Kind::disk);
    out << std::setprecision(12);
    out << "rectangle: " << rect.value << " (" << rect.method << ", 4/pi, tolerance " << rect.tolerance << ")\n";
    out << "disk: " << disk.value << " (" << disk.method << " at s = " << disk.argmax << ", reference "
        << disk.reference_value << " +/- " << disk.tolerance << ")\n";
    out << "disk nodal constant: " << 0.5 * disk.value << "\n";
    return rect.within_tolerance() && disk.within_tolerance() ? 0 : 2;
}

} // namespace detail

inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr)
{
    CLI::App app{"Neumann domains of Laplacian eigenfunctions on rectangles and disks", "neumann"};
    app.require_subcommand(1);
    RunConfig rc;
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: NEUMANN_THREADS or all cores)");

    auto* modes = app.add_subcommand("modes", "list eigenvalues in increasing order (CSV)");
    int count = 20;
    modes->add_option("--domain", rc.domain)->capture_default_str();
    modes->add_option("--count", count, "number of eigenvalues")->capture_default_str();

    auto* specfun = app.add_subcommand("specfun", "special functions");
    specfun->require_subcommand(1);
    auto* zeros = specfun->add_subcommand("zeros", "Bessel zeros j_{n,m} and j'_{n,m} (CSV)");
    int zn = 0, zcount = 5;
    zeros->add_option("--n", zn, "order")->capture_default_str();
    zeros->add_option("--count", zcount, "number of zeros")->capture_default_str();

    auto* critical = app.add_subcommand("critical", "critical points of a mode (CSV)");
    detail::add_mode_options(critical, rc);

    auto* flow = app.add_subcommand("flow", "gradient flow line through a point (CSV)");
    detail::add_mode_options(flow, rc);
    std::string seed, direction = "both";
    flow->add_option("--seed", seed, "start point x,y")->required();
    flow->add_option("--direction", direction, "forward | backward | both")->capture_default_str();
    flow->add_option("--rtol", rc.rtol)->capture_default_str();
    flow->add_option("--atol", rc.atol)->capture_default_str();
    flow->add_option("--max-step", rc.max_step)->capture_default_str();

    auto* partition = app.add_subcommand("partition", "Neumann domains of a mode");
    detail::add_mode_options(partition, rc);
    detail::add_partition_options(partition, rc);
    partition->add_option("--json", rc.json_path, "write the partition as JSON");
    partition->add_option("--svg", rc.svg_path, "write a picture of the partition");
    partition->add_flag("!--no-verify", rc.verify, "skip the structural checks");

    auto* render = app.add_subcommand("render", "draw the Neumann domains of a mode as SVG");
    detail::add_mode_options(render, rc);
    detail::add_partition_options(render, rc);
    render->add_option("--svg", rc.svg_path, "output file")->required();

    auto* table = app.add_subcommand("count-table", "labelled counts against the closed forms (CSV)");
    int nmax = 3, mmax = 3;
    table->add_option("--domain", rc.domain)->capture_default_str();
    table->add_option("--nmax", nmax)->capture_default_str();
    table->add_option("--mmax", mmax)->capture_default_str();
    detail::add_partition_options(table, rc);

    app.add_subcommand("constants", "limits of mu(u_k)/k for rectangles and the disk");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    if (threads > 0) setenv("NEUMANN_THREADS", std::to_string(threads).c_str(), 1);
    try {
        if (*modes) return detail::cmd_modes(rc, count, out);
        if (*zeros) return detail::cmd_zeros(zn, zcount, out);
        if (*critical) return detail::cmd_critical(rc, out);
        if (*flow) return detail::cmd_flow(rc, seed, direction, out);
        if (*partition) return detail::cmd_partition(rc, false, out);
        if (*render) {
            rc.verify = false;
            return detail::cmd_partition(rc, true, out);
        }
        if (*table) return detail::cmd_count_table(rc, nmax, mmax, out);
        return detail::cmd_constants(out);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::ios_base::failure& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "failed: " << e.what() << "\n";
        return 2;
    }
}

} // namespace neumann
