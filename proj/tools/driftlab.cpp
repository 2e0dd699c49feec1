// driftlab: command-line front end for the drifted-lattice samplers and
// estimators.  Every run is a pure function of its flags: seeds derive all
// randomness, so reruns are bit-identical.
//
// Exit codes: 0 success, 2 invalid arguments or domain error, 3 linear
// solver failure.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "drift/experiments.hpp"
#include "drift/green.hpp"
#include "drift/lattice.hpp"
#include "drift/wilson.hpp"

namespace {

struct Settings {
    drift::ExperimentConfig cfg;
    std::string config_path;
    std::string format = "csv";
};

drift::Vertex parse_vertex(const std::string& text, int d, const char* what) {
    std::vector<std::int64_t> nums;
    std::stringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            nums.push_back(std::stoll(tok));
        } catch (const std::exception&) {
            throw std::domain_error(std::string(what) + ": bad coordinate '" + tok + "'");
        }
    }
    if (nums.size() != static_cast<std::size_t>(d) + 1) {
        throw std::domain_error(std::string(what) + ": expected " + std::to_string(d + 1) +
                                " comma-separated coordinates, got " + std::to_string(nums.size()));
    }
    std::vector<std::int32_t> x(nums.begin() + 1, nums.end());
    return drift::make_vertex(nums[0], std::move(x));
}

// config file: a JSON object whose keys mirror the flags --
//   {"dim": 3, "lambda": 0.693, "lazy": false, "seed": 1, "samples": 1000,
//    "horizon": 100000, "k0": 1, "out": "rows.csv", "format": "csv",
//    "box": {"n_min": -64, "n_max": 128, "x_radius": 64}}
// Flags given on the command line override file values.
void apply_config_file(Settings& s) {
    if (s.config_path.empty()) return;
    std::ifstream in(s.config_path);
    if (!in) throw std::domain_error("cannot open config file: " + s.config_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw std::domain_error("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw std::domain_error("config file must hold a JSON object");
    if (doc.contains("dim")) s.cfg.params.d = doc["dim"].get<int>();
    if (doc.contains("lambda")) s.cfg.params.lambda = doc["lambda"].get<double>();
    if (doc.contains("lazy")) s.cfg.params.lazy = doc["lazy"].get<bool>();
    if (doc.contains("seed")) s.cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("samples")) s.cfg.samples = doc["samples"].get<std::int64_t>();
    if (doc.contains("horizon")) s.cfg.horizon = doc["horizon"].get<std::int64_t>();
    if (doc.contains("k0")) s.cfg.k0 = doc["k0"].get<int>();
    if (doc.contains("out")) s.cfg.output_path = doc["out"].get<std::string>();
    if (doc.contains("format")) s.format = doc["format"].get<std::string>();
    if (doc.contains("box")) {
        const auto& b = doc["box"];
        if (b.contains("n_min")) s.cfg.box.n_min = b["n_min"].get<std::int64_t>();
        if (b.contains("n_max")) s.cfg.box.n_max = b["n_max"].get<std::int64_t>();
        if (b.contains("x_radius")) s.cfg.box.x_radius = b["x_radius"].get<std::int32_t>();
    }
}

void finish_settings(Settings& s) {
    if (s.format == "csv") {
        s.cfg.format = drift::OutputFormat::csv;
    } else if (s.format == "json") {
        s.cfg.format = drift::OutputFormat::json;
    } else {
        throw std::domain_error("format must be csv or json");
    }
    // accepted for compatibility; estimators are single-threaded and
    // seed-deterministic, so the value never changes results
    if (const char* env = std::getenv("DRIFTLAB_THREADS")) {
        int threads = std::atoi(env);
        if (threads < 1) throw std::domain_error("DRIFTLAB_THREADS must be a positive integer");
    }
}

void emit_rows(const Settings& s, const std::vector<drift::EstimateRow>& rows) {
    std::string text = s.cfg.format == drift::OutputFormat::csv ? drift::rows_to_csv(rows)
                                                                : drift::rows_to_json(rows);
    if (s.cfg.output_path.empty()) {
        std::cout << text;
    } else {
        drift::write_rows(s.cfg, rows);
    }
}

void emit_text(const Settings& s, const std::string& text) {
    if (s.cfg.output_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(s.cfg.output_path);
    if (!out) throw std::domain_error("cannot open output path: " + s.cfg.output_path);
    out << text;
}

void add_common(CLI::App* cmd, Settings& s) {
    cmd->add_option("--config", s.config_path, "JSON config file; flags override its values");
    cmd->add_option("--dim", s.cfg.params.d, "transverse dimension d");
    cmd->add_option("--lambda", s.cfg.params.lambda, "drift strength (> 0, default ln 2)");
    cmd->add_flag("--lazy", s.cfg.params.lazy, "use the lazy kernel");
    cmd->add_option("--seed", s.cfg.seed, "master RNG seed");
    cmd->add_option("--samples", s.cfg.samples, "number of Monte Carlo samples");
    cmd->add_option("--horizon", s.cfg.horizon, "walk truncation horizon (steps)");
    cmd->add_option("--box-nmin", s.cfg.box.n_min, "window: lowest drifted level");
    cmd->add_option("--box-nmax", s.cfg.box.n_max, "window: highest drifted level");
    cmd->add_option("--box-xradius", s.cfg.box.x_radius, "window: sup-norm transverse radius");
    cmd->add_option("--out", s.cfg.output_path, "output file (default: stdout)");
    cmd->add_option("--format", s.format, "output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
}

bool flag_given(const CLI::App* cmd, const std::string& name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

// Re-apply config-file values for options the user did not pass explicitly:
// parse order is flags -> file -> flags-win merge.
void merge_config(const CLI::App* cmd, Settings& s, const Settings& defaults) {
    if (s.config_path.empty()) return;
    Settings file = defaults;
    file.config_path = s.config_path;
    apply_config_file(file);
    if (!flag_given(cmd, "--dim")) s.cfg.params.d = file.cfg.params.d;
    if (!flag_given(cmd, "--lambda")) s.cfg.params.lambda = file.cfg.params.lambda;
    if (!flag_given(cmd, "--lazy")) s.cfg.params.lazy = file.cfg.params.lazy;
    if (!flag_given(cmd, "--seed")) s.cfg.seed = file.cfg.seed;
    if (!flag_given(cmd, "--samples")) s.cfg.samples = file.cfg.samples;
    if (!flag_given(cmd, "--horizon")) s.cfg.horizon = file.cfg.horizon;
    if (!flag_given(cmd, "--box-nmin")) s.cfg.box.n_min = file.cfg.box.n_min;
    if (!flag_given(cmd, "--box-nmax")) s.cfg.box.n_max = file.cfg.box.n_max;
    if (!flag_given(cmd, "--box-xradius")) s.cfg.box.x_radius = file.cfg.box.x_radius;
    if (!flag_given(cmd, "--out")) s.cfg.output_path = file.cfg.output_path;
    if (!flag_given(cmd, "--format")) s.format = file.format;
    if (!flag_given(cmd, "--k0")) s.cfg.k0 = file.cfg.k0;
}

drift::EstimateRow green_estimate_row(const char* label, const drift::GreenEstimate& est) {
    drift::EstimateRow row;
    row.label = label;
    row.value = est.value;
    row.std_error = est.std_error;
    row.put("samples", static_cast<double>(est.samples));
    row.put("truncation_bound", est.truncation_bound);
    return row;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"estimators and samplers for the drifted lattice"};
    app.require_subcommand(1);
    app.footer("DRIFTLAB_THREADS is accepted for compatibility; estimators are\n"
               "single-threaded and seed-deterministic, so results never depend on it.");

    Settings s;
    s.cfg.params.lambda = std::log(2.0);
    const Settings defaults = s;
    std::string src_text = "0,0", target_text = "0,0";
    std::string start_a_text, start_b_text, z_text, zp_text, root_text;
    std::vector<std::string> w_texts;
    int mesh = 32;
    double eps = 1e-3;
    int p_lo = 1, p_hi = 1, m = 0;

    auto* c_green = app.add_subcommand("green-exact", "solve the Green table on the window");
    add_common(c_green, s);
    c_green->add_option("--src", src_text, "source vertex n,x1,..,xd");

    auto* c_mc = app.add_subcommand("green-mc", "Monte Carlo Green estimate for one target");
    add_common(c_mc, s);
    c_mc->add_option("--src", src_text, "source vertex n,x1,..,xd");
    c_mc->add_option("--target", target_text, "target vertex n,x1,..,xd");

    auto* c_bubble = app.add_subcommand("bubble", "second-moment quadrature of the step law");
    add_common(c_bubble, s);
    c_bubble->add_option("--mesh", mesh, "quadrature mesh per axis (>= 8)");
    c_bubble->add_option("--eps", eps, "cutoff radius around the zero mode");

    auto* c_ust = app.add_subcommand("ust", "sample one spanning tree of the window");
    add_common(c_ust, s);
    c_ust->add_option("--root", root_text, "root vertex for a free window (default: wired)");

    auto* c_wsf = app.add_subcommand("wsf", "sample truncated forest branches rooted at infinity");
    add_common(c_wsf, s);
    c_wsf->add_option("--start", w_texts, "branch start n,x1,..,xd (repeatable)");

    auto* c_inter = app.add_subcommand("intersections", "two-walk collision probability");
    add_common(c_inter, s);
    c_inter->add_option("--start-a", start_a_text, "first walk start (default origin)");
    c_inter->add_option("--start-b", start_b_text, "second walk start (default origin)");

    auto* c_conn = app.add_subcommand("connectivity", "branch-of-0 hit probability from z");
    add_common(c_conn, s);
    c_conn->add_option("--z", z_text, "probe vertex n,x1,..,xd")->required();

    auto* c_cross = app.add_subcommand("crossings", "section collision probabilities (d = 2)");
    add_common(c_cross, s);
    c_cross->add_option("--p-lo", p_lo, "first cylinder scale");
    c_cross->add_option("--p-hi", p_hi, "last cylinder scale");
    c_cross->add_option("--k0", s.cfg.k0, "scale exponent multiplier");

    auto* c_spread = app.add_subcommand("spread", "joint-component probability of a vertex set");
    add_common(c_spread, s);
    c_spread->add_option("--w", w_texts, "set member n,x1,..,xd (repeatable)")->required();

    auto* c_sep = app.add_subcommand("separation", "composed reachability across forests");
    add_common(c_sep, s);
    c_sep->add_option("--z", z_text, "start vertex n,x1,..,xd")->required();
    c_sep->add_option("--z-prime", zp_text, "target vertex n,x1,..,xd")->required();
    c_sep->add_option("--m", m, "number of off-forest hops allowed (>= 0)");

    auto* c_end = app.add_subcommand("one-end", "multi-crossing fraction of windowed trees");
    add_common(c_end, s);
    c_end->add_option("--p-lo", p_lo, "first cutset scale");
    c_end->add_option("--p-hi", p_hi, "last cutset scale");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* cmd = app.get_subcommands().front();
    try {
        merge_config(cmd, s, defaults);
        finish_settings(s);
        const drift::LatticeParams& params = s.cfg.params;
        const int d = params.d;

        if (cmd == c_green) {
            drift::FiniteBox box = s.cfg.box;
            box.wired = true;
            drift::GreenTable table =
                drift::green_exact(params, box, parse_vertex(src_text, d, "--src"));
            emit_text(s, drift::to_csv(table));
        } else if (cmd == c_mc) {
            drift::GreenEstimate est = drift::green_mc(
                params, parse_vertex(src_text, d, "--src"),
                parse_vertex(target_text, d, "--target"),
                static_cast<std::uint64_t>(s.cfg.horizon),
                static_cast<std::uint64_t>(s.cfg.samples), s.cfg.seed);
            emit_rows(s, {green_estimate_row("green_mc", est)});
        } else if (cmd == c_bubble) {
            drift::EstimateRow row;
            row.label = "bubble";
            row.value = drift::bubble_integral(params, mesh, eps);
            row.put("mesh", static_cast<double>(mesh));
            row.put("eps", eps);
            emit_rows(s, {row});
        } else if (cmd == c_ust) {
            drift::FiniteBox box = s.cfg.box;
            std::optional<drift::Vertex> root;
            box.wired = root_text.empty();
            if (!root_text.empty()) root = parse_vertex(root_text, d, "--root");
            emit_text(s, drift::to_text(drift::ust_finite(params, box, root, {}, s.cfg.seed)));
        } else if (cmd == c_wsf) {
            drift::FiniteBox box = s.cfg.box;
            box.wired = false;
            std::vector<drift::Vertex> starts;
            starts.reserve(w_texts.size());
            for (const auto& t : w_texts) starts.push_back(parse_vertex(t, d, "--start"));
            emit_text(s, drift::to_text(drift::wsf_rooted_at_infinity(
                             params, box, starts, static_cast<std::uint64_t>(s.cfg.horizon),
                             s.cfg.seed)));
        } else if (cmd == c_inter) {
            drift::Vertex a = start_a_text.empty() ? drift::origin(d)
                                                   : parse_vertex(start_a_text, d, "--start-a");
            drift::Vertex b = start_b_text.empty() ? drift::origin(d)
                                                   : parse_vertex(start_b_text, d, "--start-b");
            emit_rows(s, {drift::intersections_experiment(s.cfg, a, b)});
        } else if (cmd == c_conn) {
            emit_rows(s, {drift::connectivity_experiment(s.cfg, parse_vertex(z_text, d, "--z"))});
        } else if (cmd == c_cross) {
            emit_rows(s, drift::crossings_experiment(s.cfg, p_lo, p_hi));
        } else if (cmd == c_spread) {
            std::vector<drift::Vertex> w;
            w.reserve(w_texts.size());
            for (const auto& t : w_texts) w.push_back(parse_vertex(t, d, "--w"));
            emit_rows(s, {drift::spread_bound_experiment(s.cfg, w)});
        } else if (cmd == c_sep) {
            emit_rows(s, {drift::separation_experiment(s.cfg, parse_vertex(z_text, d, "--z"),
                                                       parse_vertex(zp_text, d, "--z-prime"), m)});
        } else if (cmd == c_end) {
            emit_rows(s, drift::one_end_diagnostic(s.cfg, p_lo, p_hi));
        }
    } catch (const drift::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
