// Command-line front end: analyze panels into reports, screen a single firm
// against benchmark thresholds, generate synthetic panels, or print
// descriptive statistics.
//
// Exit codes: 0 success, 1 data errors (parse or validation failures),
// 2 usage errors (bad flags, unreadable input, bad config).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capstruct/config.hpp"
#include "capstruct/ingest.hpp"
#include "capstruct/report.hpp"
#include "capstruct/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsage = 2;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string file_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

std::string strip_suffix(std::string s, const std::string& suffix) {
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
        s.erase(s.size() - suffix.size());
    return s;
}

struct AnalyzeArgs {
    std::vector<std::string> panel_paths;
    std::vector<std::string> price_paths;
    std::string out_dir;
    std::string format = "markdown";
    std::string config_path;
    double wacc = 0, roi = 0;
    bool has_wacc = false, has_roi = false;
};

int load_engine_config(const std::string& path, capstruct::config::EngineConfig& cfg) {
    const auto text = read_file(path);
    if (!text) {
        std::cerr << "error: cannot read config file " << path << "\n";
        return kExitUsage;
    }
    try {
        cfg = capstruct::config::parse_config(*text);
    } catch (const capstruct::config::ConfigError& e) {
        std::cerr << "error: " << path << ": " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitOk;
}

int run_analyze(const AnalyzeArgs& args) {
    capstruct::report::Format fmt;
    try {
        fmt = capstruct::report::parse_format(args.format);
    } catch (const capstruct::report::UnsupportedFormat& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    capstruct::report::AnalysisOptions opt;
    if (!args.config_path.empty()) {
        if (int rc = load_engine_config(args.config_path, opt.engine); rc != kExitOk) return rc;
    }
    if (args.has_wacc) opt.wacc = args.wacc;
    if (args.has_roi) opt.roi = args.roi;

    capstruct::ingest::Dataset data;
    std::map<std::string, std::string> stem_to_id;  // panel file stem -> firm id
    for (const auto& path : args.panel_paths) {
        const auto text = read_file(path);
        if (!text) {
            std::cerr << "error: cannot read " << path << "\n";
            return kExitUsage;
        }
        try {
            auto panel = capstruct::ingest::parse_panel_csv(*text, file_stem(path));
            if (data.panels.count(panel.firm_id)) {
                std::cerr << "error: duplicate firm id " << panel.firm_id << " from " << path
                          << "\n";
                return kExitDataError;
            }
            stem_to_id[file_stem(path)] = panel.firm_id;
            data.panels.emplace(panel.firm_id, std::move(panel));
        } catch (const capstruct::ingest::ParseError& e) {
            std::cerr << "error: " << path << ": " << e.what() << "\n";
            return kExitDataError;
        }
    }
    std::vector<capstruct::ingest::PriceSeries> unmatched;
    for (const auto& path : args.price_paths) {
        const auto text = read_file(path);
        if (!text) {
            std::cerr << "error: cannot read " << path << "\n";
            return kExitUsage;
        }
        try {
            auto series = capstruct::ingest::parse_price_csv(*text);
            if (series.firm_id.empty()) {
                // No firm_id column: resolve <stem>_prices.csv through the
                // panel that was loaded from <stem>.csv, whatever id that
                // panel declared internally.
                const std::string stem = strip_suffix(file_stem(path), "_prices");
                const auto it = stem_to_id.find(stem);
                series.firm_id = it != stem_to_id.end() ? it->second : stem;
            }
            if (data.panels.count(series.firm_id)) {
                data.prices.emplace(series.firm_id, std::move(series));
            } else {
                unmatched.push_back(std::move(series));
            }
        } catch (const capstruct::ingest::ParseError& e) {
            std::cerr << "error: " << path << ": " << e.what() << "\n";
            return kExitDataError;
        }
    }
    if (unmatched.size() == 1 && data.panels.size() == 1 && data.prices.empty()) {
        // One panel, one price file: pair them even if the names disagree.
        auto series = std::move(unmatched.front());
        series.firm_id = data.panels.begin()->first;
        data.prices.emplace(series.firm_id, std::move(series));
        unmatched.clear();
    }
    for (const auto& s : unmatched)
        std::cerr << "warning: price series " << s.firm_id << " matches no panel; ignored\n";

    const auto bundle = capstruct::report::analyze_dataset(data, opt);
    const std::string rendered = capstruct::report::render_report(bundle, fmt);

    if (args.out_dir.empty()) {
        std::cout << rendered;
    } else {
        std::error_code ec;
        std::filesystem::create_directories(args.out_dir, ec);
        const auto out_path = std::filesystem::path(args.out_dir) /
                              (std::string("report.") + capstruct::report::file_extension(fmt));
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write " << out_path.string() << "\n";
            return kExitUsage;
        }
        out << rendered;
        std::cout << "wrote " << out_path.string() << "\n";
    }

    int rc = kExitOk;
    for (const auto& firm : bundle.firms) {
        if (!firm.validation.ok()) {
            std::cerr << "error: panel " << firm.panel.firm_id << " failed validation ("
                      << firm.validation.errors.size() << " errors); see report\n";
            rc = kExitDataError;
        }
    }
    return rc;
}

int run_single_panel(const std::string& path, const capstruct::report::AnalysisOptions& opt,
                     bool screening) {
    const auto text = read_file(path);
    if (!text) {
        std::cerr << "error: cannot read " << path << "\n";
        return kExitUsage;
    }
    capstruct::ingest::FirmPanel panel;
    try {
        panel = capstruct::ingest::parse_panel_csv(*text, file_stem(path));
    } catch (const capstruct::ingest::ParseError& e) {
        std::cerr << "error: " << path << ": " << e.what() << "\n";
        return kExitDataError;
    }
    const auto analysis = capstruct::report::analyze_firm(panel, nullptr, opt);
    std::cout << "## Firm " << analysis.panel.firm_id << "\n\n";
    if (screening) {
        std::cout << capstruct::report::render_screening(analysis);
    } else {
        if (!analysis.derived) {
            std::cerr << "error: " << analysis.derive_failure << "\n";
            return kExitDataError;
        }
        std::cout << capstruct::report::render_descriptives(analysis);
    }
    return analysis.validation.ok() ? kExitOk : kExitDataError;
}

struct SimulateArgs {
    std::string theory = "ni";
    std::size_t years = 12;
    std::uint64_t seed = 1;
    double effect = 2.0;
    double scale = 1e8;
    double noise = -1;  // default: 0.05 * scale
    std::string firm_id;
    std::string out_path;
};

int run_simulate(const SimulateArgs& args) {
    static const std::map<std::string, capstruct::theorylab::Theory> theories = {
        {"ni", capstruct::theorylab::Theory::NetIncome},
        {"noi", capstruct::theorylab::Theory::NetOperatingIncome},
        {"mm", capstruct::theorylab::Theory::ModiglianiMiller},
        {"tradeoff", capstruct::theorylab::Theory::TradeOff},
        {"pecking", capstruct::theorylab::Theory::PeckingOrder},
        {"agency", capstruct::theorylab::Theory::Agency},
    };
    const auto it = theories.find(args.theory);
    if (it == theories.end()) {
        std::cerr << "error: unknown theory '" << args.theory
                  << "' (use ni, noi, mm, tradeoff, pecking, or agency)\n";
        return kExitUsage;
    }
    capstruct::synth::GeneratorSpec spec;
    spec.theory = it->second;
    spec.n_years = args.years;
    spec.seed = args.seed;
    spec.effect_size = args.effect;
    spec.base_scale = args.scale;
    spec.noise_sd = args.noise < 0 ? 0.05 * args.scale : args.noise;
    spec.firm_id = args.firm_id;

    std::string csv;
    try {
        csv = capstruct::ingest::serialize_panel_csv(capstruct::synth::generate_panel(spec));
    } catch (const capstruct::synth::InvalidSpec& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (args.out_path.empty()) {
        std::cout << csv;
    } else {
        std::ofstream out(args.out_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write " << args.out_path << "\n";
            return kExitUsage;
        }
        out << csv;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Capital structure diagnostics engine"};
    app.require_subcommand(1);

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "Analyze firm panels and render a report");
    analyze->add_option("panels", analyze_args.panel_paths, "Panel CSV files")
        ->required()
        ->expected(-1);
    analyze->add_option("--prices", analyze_args.price_paths,
                        "Daily price CSV files (matched to firms by name)");
    analyze->add_option("--out", analyze_args.out_dir, "Directory for the report file");
    analyze->add_option("--format", analyze_args.format, "markdown, csv, or structured")
        ->capture_default_str();
    analyze->add_option("--config", analyze_args.config_path, "Engine configuration file");
    auto* wacc_opt = analyze->add_option("--wacc", analyze_args.wacc,
                                         "Weighted average cost of capital for the screen");
    auto* roi_opt = analyze->add_option("--roi", analyze_args.roi,
                                        "Return on investment for the screen");

    std::string screen_path;
    double screen_wacc = 0, screen_roi = 0;
    auto* screen = app.add_subcommand("screen", "Benchmark screening for one panel");
    screen->add_option("panel", screen_path, "Panel CSV file")->required();
    auto* swacc_opt = screen->add_option("--wacc", screen_wacc, "Weighted average cost of capital");
    auto* sroi_opt = screen->add_option("--roi", screen_roi, "Return on investment");

    std::string describe_path;
    auto* describe = app.add_subcommand("describe", "Descriptive statistics for one panel");
    describe->add_option("panel", describe_path, "Panel CSV file")->required();

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic panel CSV");
    simulate->add_option("--theory", sim_args.theory,
                         "ni, noi, mm, tradeoff, pecking, or agency")
        ->capture_default_str();
    simulate->add_option("--years", sim_args.years, "Panel length in years")
        ->capture_default_str();
    simulate->add_option("--seed", sim_args.seed, "Generator seed")->capture_default_str();
    simulate->add_option("--effect", sim_args.effect, "Planted effect size")
        ->capture_default_str();
    simulate->add_option("--scale", sim_args.scale, "Base currency scale")
        ->capture_default_str();
    simulate->add_option("--noise", sim_args.noise, "Noise standard deviation (default scale/20)");
    simulate->add_option("--firm-id", sim_args.firm_id, "Firm identifier for the output");
    simulate->add_option("--out", sim_args.out_path, "Output CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*analyze) {
            analyze_args.has_wacc = wacc_opt->count() > 0;
            analyze_args.has_roi = roi_opt->count() > 0;
            return run_analyze(analyze_args);
        }
        if (*screen) {
            capstruct::report::AnalysisOptions opt;
            if (swacc_opt->count()) opt.wacc = screen_wacc;
            if (sroi_opt->count()) opt.roi = screen_roi;
            return run_single_panel(screen_path, opt, /*screening=*/true);
        }
        if (*describe) return run_single_panel(describe_path, {}, /*screening=*/false);
        if (*simulate) return run_simulate(sim_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitUsage;
}
