// Command-line front end: ingestion -> classification -> backtest -> reports.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "regimetrade/classifier.hpp"
#include "regimetrade/km2o.hpp"
#include "regimetrade/prices.hpp"
#include "regimetrade/report.hpp"
#include "regimetrade/strategy.hpp"
#include "regimetrade/transforms.hpp"

namespace rt = regimetrade;
namespace fs = std::filesystem;

namespace {

struct RunConfig {
    std::size_t window = rt::kDefaultWindow;
    double alpha = 0.5;
    double lambda1 = rt::kDefaultLambda1;
    double lambda2 = rt::kDefaultLambda2;
    int n_ma = 10;
    int n_psy = 9;
    std::string orthogonality = "sum";
    int lag_budget = 0;
    std::string input;
    std::string outdir = ".";
    std::uint64_t seed = 0;
};

// Flat key=value config file; '#' starts a comment. Flags given on the
// command line take precedence; config values take precedence over
// built-in defaults.
std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw rt::IoError("cannot open config '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = rt::detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw rt::ValidationError(path + ":" + std::to_string(line_no) +
                                      ": expected key=value");
        }
        out[rt::detail::trim(line.substr(0, eq))] = rt::detail::trim(line.substr(eq + 1));
    }
    return out;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text);

template <>
double parse_value<double>(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw rt::ValidationError("config field '" + key + "': bad numeric value '" + text + "'");
}

template <>
long parse_value<long>(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        long v = std::stol(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw rt::ValidationError("config field '" + key + "': bad integer value '" + text + "'");
}

void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "window") cfg.window = static_cast<std::size_t>(parse_value<long>(key, value));
        else if (key == "alpha") cfg.alpha = parse_value<double>(key, value);
        else if (key == "lambda1") cfg.lambda1 = parse_value<double>(key, value);
        else if (key == "lambda2") cfg.lambda2 = parse_value<double>(key, value);
        else if (key == "nma") cfg.n_ma = static_cast<int>(parse_value<long>(key, value));
        else if (key == "npsy") cfg.n_psy = static_cast<int>(parse_value<long>(key, value));
        else if (key == "orthogonality") cfg.orthogonality = value;
        else if (key == "lag_budget") cfg.lag_budget = static_cast<int>(parse_value<long>(key, value));
        else if (key == "input") cfg.input = value;
        else if (key == "outdir") cfg.outdir = value;
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_value<long>(key, value));
        else throw rt::ValidationError("unknown config field '" + key + "'");
    }
}

rt::TestConfig test_config(const RunConfig& cfg) {
    rt::TestConfig tc;
    tc.alpha = cfg.alpha;
    if (cfg.orthogonality == "sum") tc.orth_mode = rt::OrthMode::Sum;
    else if (cfg.orthogonality == "literal") tc.orth_mode = rt::OrthMode::Literal;
    else throw rt::ValidationError("field 'orthogonality' must be 'sum' or 'literal', got '" +
                                   cfg.orthogonality + "'");
    tc.lag_budget = cfg.lag_budget;
    return tc;
}

rt::RuleMode parse_mode(const std::string& text) {
    if (text == "full") return rt::RuleMode::Full;
    if (text == "rule2-only") return rt::RuleMode::Rule2Only;
    if (text == "ma-only") return rt::RuleMode::MaOnly;
    throw rt::ValidationError("field 'mode' must be full, rule2-only, or ma-only, got '" + text +
                              "'");
}

fs::path out_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.outdir);
    return fs::path(cfg.outdir) / name;
}

rt::PriceSeries load_input(const RunConfig& cfg) {
    if (cfg.input.empty()) throw rt::ValidationError("field 'input' is required");
    std::vector<std::string> warnings;
    auto prices = rt::load_csv(cfg.input, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    return prices;
}

struct Classification {
    std::vector<rt::LambdaPoint> lambdas;
    std::vector<rt::Regime> labels;       // aligned to lambdas
    std::vector<rt::Regime> per_price;    // aligned to the price series
};

Classification classify_prices(const rt::PriceSeries& prices, const RunConfig& cfg) {
    auto ccr = rt::to_ccr(prices);
    Classification c;
    c.lambdas = rt::lambda_series(ccr, cfg.window, test_config(cfg));
    c.labels = rt::classify(c.lambdas, cfg.lambda1, cfg.lambda2);
    c.per_price = rt::regimes_for_prices(prices.size(), c.lambdas, c.labels);
    return c;
}

std::vector<rt::Regime> regimes_for(const rt::PriceSeries& prices, const RunConfig& cfg,
                                    const std::string& regimes_file) {
    if (!regimes_file.empty()) return rt::load_regimes_csv(regimes_file, prices);
    return classify_prices(prices, cfg).per_price;
}

rt::JsonObject summary_json(const rt::PriceSeries& prices, const Classification& c,
                            const RunConfig& cfg) {
    std::size_t n_stat = 0, n_inter = 0, n_non = 0, n_un = 0;
    for (auto r : c.labels) {
        switch (r) {
            case rt::Regime::Stationary: ++n_stat; break;
            case rt::Regime::Intermediate: ++n_inter; break;
            case rt::Regime::NonStationary: ++n_non; break;
            default: ++n_un; break;
        }
    }
    auto ccr = rt::to_ccr(prices);
    std::vector<double> stationary_ccr;
    for (std::size_t k = 0; k < c.lambdas.size(); ++k) {
        if (c.labels[k] == rt::Regime::Stationary) {
            stationary_ccr.push_back(ccr[c.lambdas[k].ccr_index]);
        }
    }
    const double days = static_cast<double>(c.labels.size());
    rt::JsonObject o;
    o.add_int("days", static_cast<long>(c.labels.size()));
    o.add_number("fraction_stationary", days > 0 ? n_stat / days : 0.0);
    o.add_number("fraction_intermediate", days > 0 ? n_inter / days : 0.0);
    o.add_number("fraction_non_stationary", days > 0 ? n_non / days : 0.0);
    o.add_number("fraction_unclassifiable", days > 0 ? n_un / days : 0.0);
    o.add_number("kurtosis_all", rt::excess_kurtosis(ccr));
    if (stationary_ccr.size() >= 4) {
        o.add_number("kurtosis_stationary", rt::excess_kurtosis(stationary_ccr));
    } else {
        o.add_string("kurtosis_stationary", "nan");
    }
    rt::JsonObject params;
    params.add_int("window", static_cast<long>(cfg.window));
    params.add_number("alpha", cfg.alpha);
    params.add_number("lambda1", cfg.lambda1);
    params.add_number("lambda2", cfg.lambda2);
    params.add_string("orthogonality", cfg.orthogonality);
    o.add_raw("params", params.dump(2));
    return o;
}

int run_synth(const RunConfig& cfg, const std::string& kind, std::size_t length, double mu,
              double sigma, double sigma_before, double sigma_after, std::size_t switch_day) {
    rt::SynthSpec spec;
    if (kind == "gaussian-walk") spec.kind = rt::SynthKind::GaussianWalk;
    else if (kind == "variance-switch") spec.kind = rt::SynthKind::VarianceSwitch;
    else throw rt::ValidationError("field 'kind' must be gaussian-walk or variance-switch");
    spec.length = length;
    spec.seed = cfg.seed;
    spec.mu = mu;
    spec.sigma = sigma;
    spec.sigma_before = sigma_before;
    spec.sigma_after = sigma_after;
    spec.switch_day = switch_day;
    rt::save_csv(rt::generate(spec), out_path(cfg, "prices.csv").string());
    return 0;
}

int run_transform(const RunConfig& cfg, const std::string& pair_spec, long pair_day) {
    auto prices = load_input(cfg);
    auto ccr = rt::to_ccr(prices);
    rt::Table t;
    t.columns = {"date", "ccr"};
    for (std::size_t k = 0; k < ccr.size(); ++k) {
        t.rows.push_back({rt::to_string(prices[k + 1].date), rt::fixed6(ccr[k])});
    }
    rt::write_report(t, rt::ReportFormat::Csv, out_path(cfg, "ccr.csv").string());

    if (!pair_spec.empty()) {
        int i = 0, j = 0;
        if (std::sscanf(pair_spec.c_str(), "%d,%d", &i, &j) != 2 || i < 0 || j <= i ||
            j >= rt::kTransformCount) {
            throw rt::ValidationError("field 'pair' must be 'i,j' with 0 <= i < j <= 18");
        }
        const std::size_t day = pair_day >= 0 ? static_cast<std::size_t>(pair_day)
                                              : ccr.size() - 1;
        auto window = rt::cut_window(ccr, day, cfg.window);
        auto norm = rt::normalize(window);
        if (!norm) throw rt::ValidationError("window ending at CCR index " +
                                             std::to_string(day) + " is degenerate");
        auto pairs = rt::build_pairs(rt::apply_transforms(*norm));
        const auto& p = pairs[static_cast<std::size_t>(i * (2 * rt::kTransformCount - i - 1) / 2 +
                                                       (j - i - 1))];
        rt::Table pt;
        pt.columns = {"n", "x_" + std::to_string(i), "x_" + std::to_string(j)};
        for (std::size_t n = 0; n < p.size(); ++n) {
            pt.rows.push_back({std::to_string(p.offset + static_cast<int>(n)),
                               rt::fixed6(p.a[n]), rt::fixed6(p.b[n])});
        }
        rt::write_report(pt, rt::ReportFormat::Csv,
                         out_path(cfg, "pair_" + std::to_string(i) + "_" + std::to_string(j) +
                                           ".csv").string());
    }
    return 0;
}

int run_classify(const RunConfig& cfg, const std::string& dump_verdicts) {
    auto prices = load_input(cfg);
    auto c = classify_prices(prices, cfg);
    rt::write_report(rt::classification_table(prices, c.lambdas, c.labels), rt::ReportFormat::Csv,
                     out_path(cfg, "classification.csv").string());
    rt::write_json(summary_json(prices, c, cfg), out_path(cfg, "summary.json").string());

    if (!dump_verdicts.empty()) {
        auto ccr = rt::to_ccr(prices);
        rt::Table t;
        t.columns = {"date", "pair_i", "pair_j", "rate_mean", "rate_var", "rate_orth",
                     "passed", "degenerate"};
        const auto tc = test_config(cfg);
        for (const auto& lp : c.lambdas) {
            if (lp.degenerate) continue;
            auto window = rt::cut_window(ccr, lp.ccr_index, cfg.window);
            std::vector<rt::StationarityVerdict> verdicts;
            rt::lambda_for_window(window, tc, &verdicts);
            auto pairs = rt::build_pairs(rt::apply_transforms(*rt::normalize(window)));
            const auto date = rt::to_string(prices[lp.ccr_index + 1].date);
            for (std::size_t k = 0; k < verdicts.size(); ++k) {
                const auto& v = verdicts[k];
                t.rows.push_back({date, std::to_string(pairs[k].first),
                                  std::to_string(pairs[k].second), rt::fixed6(v.rate_mean),
                                  rt::fixed6(v.rate_var), rt::fixed6(v.rate_orth),
                                  v.passed ? "1" : "0", v.degenerate ? "1" : "0"});
            }
        }
        rt::write_report(t, rt::ReportFormat::Csv, dump_verdicts);
    }
    return 0;
}

int run_backtest(const RunConfig& cfg, const std::string& regimes_file, const std::string& mode) {
    auto prices = load_input(cfg);
    auto regimes = regimes_for(prices, cfg, regimes_file);
    rt::IndicatorParams params{cfg.n_ma, cfg.n_psy, false};
    const auto rule_mode = parse_mode(mode);
    auto result = rt::backtest(prices, regimes, params, rule_mode);
    rt::write_backtest_report(result, params, rule_mode,
                              out_path(cfg, "report.json").string());
    rt::write_report(rt::equity_table(prices, result), rt::ReportFormat::Csv,
                     out_path(cfg, "equity.csv").string());
    return 0;
}

int run_sweep(const RunConfig& cfg, const std::string& regimes_file, const std::string& mode,
              int nma_min, int nma_max, std::vector<int> npsy_values) {
    if (nma_min < 2 || nma_max < nma_min) {
        throw rt::ValidationError("field 'nma-min/nma-max': need 2 <= nma-min <= nma-max");
    }
    auto prices = load_input(cfg);
    auto regimes = regimes_for(prices, cfg, regimes_file);
    std::vector<int> nma_values;
    for (int v = nma_min; v <= nma_max; ++v) nma_values.push_back(v);
    if (npsy_values.empty()) npsy_values = {3, 5, 7, 9, 11};
    auto rows = rt::sweep(prices, regimes, nma_values, npsy_values, parse_mode(mode));
    rt::write_report(rt::sweep_table(rows), rt::ReportFormat::Csv,
                     out_path(cfg, "sweep.csv").string());
    return 0;
}

int run_stats(const RunConfig& cfg, const std::string& regimes_file) {
    auto prices = load_input(cfg);
    auto ccr = rt::to_ccr(prices);
    rt::JsonObject o;
    o.add_number("kurtosis_all", rt::excess_kurtosis(ccr));
    std::vector<rt::Regime> regimes = regimes_for(prices, cfg, regimes_file);
    std::size_t n_stat = 0, n_inter = 0, n_non = 0, classified = 0;
    std::vector<double> stationary_ccr;
    for (std::size_t p = 0; p < regimes.size(); ++p) {
        if (regimes[p] == rt::Regime::Unclassifiable) continue;
        ++classified;
        if (regimes[p] == rt::Regime::Stationary) {
            ++n_stat;
            if (p >= 1) stationary_ccr.push_back(ccr[p - 1]);
        } else if (regimes[p] == rt::Regime::Intermediate) {
            ++n_inter;
        } else {
            ++n_non;
        }
    }
    o.add_int("days", static_cast<long>(classified));
    const double days = classified > 0 ? static_cast<double>(classified) : 1.0;
    o.add_number("fraction_stationary", n_stat / days);
    o.add_number("fraction_intermediate", n_inter / days);
    o.add_number("fraction_non_stationary", n_non / days);
    if (stationary_ccr.size() >= 4) {
        o.add_number("kurtosis_stationary", rt::excess_kurtosis(stationary_ccr));
    } else {
        o.add_string("kurtosis_stationary", "nan");
    }
    rt::write_json(o, out_path(cfg, "stats.json").string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    try {
        // The config file must be applied before CLI11 binds flag values,
        // so it is located with a pre-scan.
        for (int a = 1; a < argc; ++a) {
            std::string arg = argv[a];
            if (arg == "--config" && a + 1 < argc) {
                apply_config(cfg, parse_config_file(argv[a + 1]));
            } else if (arg.rfind("--config=", 0) == 0) {
                apply_config(cfg, parse_config_file(arg.substr(9)));
            }
        }

        CLI::App app{"KM2O-Langevin stationarity regimes and three-rule backtesting"};
        app.require_subcommand(1);

        std::string config_path, regimes_file, mode = "full", dump_verdicts;
        std::string kind = "gaussian-walk", pair_spec;
        std::size_t length = 500, switch_day = 250;
        double mu = 0.0, sigma = 0.01, sigma_before = 0.01, sigma_after = 0.05;
        int nma_min = 5, nma_max = 30;
        std::vector<int> npsy_values;
        long pair_day = -1;

        auto add_common = [&](CLI::App* sub) {
            sub->add_option("--config", config_path, "flat key=value config file");
            sub->add_option("-i,--input", cfg.input, "input price CSV (date,close)");
            sub->add_option("-o,--outdir", cfg.outdir, "output directory");
        };
        auto add_classifier_opts = [&](CLI::App* sub) {
            sub->add_option("--window", cfg.window, "window length N");
            sub->add_option("--alpha", cfg.alpha, "Test(S)' relaxation in (0,1]");
            sub->add_option("--lambda1", cfg.lambda1, "stationary threshold");
            sub->add_option("--lambda2", cfg.lambda2, "non-stationary threshold");
            sub->add_option("--orthogonality", cfg.orthogonality, "sum or literal");
            sub->add_option("--lag-budget", cfg.lag_budget, "orthogonality lag budget (0 = auto)");
        };
        auto add_strategy_opts = [&](CLI::App* sub) {
            sub->add_option("--nma", cfg.n_ma, "moving-average length");
            sub->add_option("--npsy", cfg.n_psy, "psychological-line length (odd)");
            sub->add_option("--regimes", regimes_file, "regime labels CSV (date,regime)");
            sub->add_option("--mode", mode, "full, rule2-only, or ma-only");
        };

        auto* synth = app.add_subcommand("synth", "generate a synthetic price CSV");
        add_common(synth);
        synth->add_option("--kind", kind, "gaussian-walk or variance-switch");
        synth->add_option("--length", length, "number of days");
        synth->add_option("--seed", cfg.seed, "RNG seed");
        synth->add_option("--mu", mu, "gaussian-walk drift");
        synth->add_option("--sigma", sigma, "gaussian-walk volatility");
        synth->add_option("--sigma-before", sigma_before, "variance-switch sigma before");
        synth->add_option("--sigma-after", sigma_after, "variance-switch sigma after");
        synth->add_option("--switch-day", switch_day, "variance-switch day index");

        auto* transform = app.add_subcommand("transform", "emit the CCR series");
        add_common(transform);
        transform->add_option("--window", cfg.window, "window length N");
        transform->add_option("--pair", pair_spec, "dump pair series 'i,j'");
        transform->add_option("--day", pair_day, "CCR index of the pair window end");

        auto* classify = app.add_subcommand("classify", "per-day lambda and regime labels");
        add_common(classify);
        add_classifier_opts(classify);
        classify->add_option("--dump-verdicts", dump_verdicts, "per-pair verdict CSV");

        auto* backtest = app.add_subcommand("backtest", "run the three-rule strategy");
        add_common(backtest);
        add_classifier_opts(backtest);
        add_strategy_opts(backtest);

        auto* sweep = app.add_subcommand("sweep", "grid search over n_ma / n_psy");
        add_common(sweep);
        add_classifier_opts(sweep);
        sweep->add_option("--regimes", regimes_file, "regime labels CSV (date,regime)");
        sweep->add_option("--mode", mode, "full, rule2-only, or ma-only");
        sweep->add_option("--nma-min", nma_min, "smallest n_ma");
        sweep->add_option("--nma-max", nma_max, "largest n_ma");
        sweep->add_option("--npsy", npsy_values, "n_psy values");

        auto* stats = app.add_subcommand("stats", "kurtosis and regime fractions");
        add_common(stats);
        add_classifier_opts(stats);
        stats->add_option("--regimes", regimes_file, "regime labels CSV (date,regime)");

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            return app.exit(e) == 0 ? 0 : 1;
        }

        if (synth->parsed()) {
            return run_synth(cfg, kind, length, mu, sigma, sigma_before, sigma_after, switch_day);
        }
        if (transform->parsed()) return run_transform(cfg, pair_spec, pair_day);
        if (classify->parsed()) return run_classify(cfg, dump_verdicts);
        if (backtest->parsed()) return run_backtest(cfg, regimes_file, mode);
        if (sweep->parsed()) {
            return run_sweep(cfg, regimes_file, mode, nma_min, nma_max, npsy_values);
        }
        if (stats->parsed()) return run_stats(cfg, regimes_file);
        return 1;
    } catch (const rt::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const rt::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
