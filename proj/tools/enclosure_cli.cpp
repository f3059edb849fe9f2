#include "enclosure/errors.hpp"
#include "enclosure/pipeline.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace enclosure;

namespace {

enum Exit { Ok = 0, Validation = 2, Numerical = 3, Extraction = 4 };

struct Args {
    std::string config;
    std::string out = ".";
    int threads = 0;
    bool oracle = false;
    std::string kind;
};

std::string in_out(const Args& a, const std::string& file) { return (fs::path(a.out) / file).string(); }

void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_admissibility(const FluxAdmissibility& a, const std::string& path) {
    write_json({{"mu_hat", a.mu_hat},
                {"C_hat", a.C_hat},
                {"tau0", a.tau0},
                {"pass", a.pass},
                {"window", {a.window_min, a.window_max}},
                {"max_relative_residual", a.max_relative_residual},
                {"message", a.message}},
               path);
}

FluxAdmissibility read_admissibility(const std::string& path) {
    std::ifstream in(path);
    nlohmann::json j;
    in >> j;
    FluxAdmissibility a;
    a.mu_hat = j.at("mu_hat");
    a.C_hat = j.at("C_hat");
    a.tau0 = j.at("tau0");
    a.pass = j.at("pass");
    a.window_min = j.at("window")[0];
    a.window_max = j.at("window")[1];
    a.max_relative_residual = j.at("max_relative_residual");
    a.message = j.at("message");
    return a;
}

void simulate(const PipelineConfig& cfg, const Args& a) {
    SimulateOutput s = run_simulate(cfg);
    write_record_csv(s.result.record, in_out(a, cfg.record_file));
    if (s.result.reference) write_record_csv(*s.result.reference, in_out(a, cfg.reference_file));
    std::cout << "wrote " << in_out(a, cfg.record_file) << "\n";
    for (const auto& n : s.notes) std::cout << "  " << n << "\n";
}

IndicateOutput indicate(const PipelineConfig& cfg, const Args& a) {
    IndicateOutput out;
    if (a.oracle) {
        out = run_indicate_oracle(cfg);
    } else {
        BoundaryRecord rec = read_record_csv(in_out(a, cfg.record_file));
        std::optional<BoundaryRecord> ref;
        if (fs::exists(in_out(a, cfg.reference_file))) ref = read_record_csv(in_out(a, cfg.reference_file));
        out = run_indicate(cfg, rec, ref ? &*ref : nullptr);
    }
    write_indicator_csv(out.samples, in_out(a, cfg.indicator_file));
    write_admissibility(out.admissibility, in_out(a, "admissibility.json"));
    std::cout << "wrote " << in_out(a, cfg.indicator_file) << " (" << out.samples.count(SampleFlag::Ok) << " of "
              << out.samples.entries.size() << " samples usable, source " << out.samples.source << ")\n";
    std::cout << "  flux admissibility: " << (out.admissibility.pass ? "pass" : "fail") << ", mu=" << out.admissibility.mu_hat
              << " (" << out.admissibility.message << ")\n";
    return out;
}

void extract(const PipelineConfig& cfg, const Args& a, const IndicatorSamples& samples,
             const std::optional<FluxAdmissibility>& adm) {
    ReconstructionReport r = run_extract(cfg, samples, adm);
    write_json(r.to_json(), in_out(a, cfg.report_file));
    write_slope_curve(samples, r.fit, in_out(a, cfg.slope_curve_file));
    std::cout << summarize(r);
}

int run(CLI::App& app, const std::string& command, const Args& a) {
    (void)app;
    try {
        if (a.threads > 0) omp_set_num_threads(a.threads);
        if (a.out != ".") fs::create_directories(a.out);
        PipelineConfig cfg = PipelineConfig::load(a.config);
        if (command == "simulate") {
            simulate(cfg, a);
        } else if (command == "indicate") {
            indicate(cfg, a);
        } else if (command == "extract") {
            IndicatorSamples s = read_indicator_csv(in_out(a, cfg.indicator_file));
            std::optional<FluxAdmissibility> adm;
            if (fs::exists(in_out(a, "admissibility.json"))) adm = read_admissibility(in_out(a, "admissibility.json"));
            extract(cfg, a, s, adm);
        } else if (command == "pipeline") {
            if (!a.oracle) simulate(cfg, a);
            IndicateOutput io = indicate(cfg, a);
            extract(cfg, a, io.samples, io.admissibility);
        } else if (command == "oracle") {
            std::optional<OracleKind> k;
            if (!a.kind.empty()) k = oracle_kind_from_string(a.kind);
            IndicateOutput io = run_indicate_oracle(cfg, k);
            write_indicator_csv(io.samples, in_out(a, cfg.indicator_file));
            std::cout << "wrote " << in_out(a, cfg.indicator_file) << " (source " << io.samples.source << ")\n";
        }
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return Validation;
    } catch (const ExtractionError& e) {
        std::cerr << "extraction error: " << e.what() << "\n";
        return Extraction;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return Validation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return Numerical;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return Validation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Numerical;
    }
    return Ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reconstruct hidden interfaces and boundaries of 1D heat conductors from boundary data"};
    app.require_subcommand(1);
    Args a;
    std::string command;
    auto add = [&](const std::string& name, const std::string& help, bool with_oracle) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", a.config, "experiment JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", a.out, "output directory");
        sub->add_option("--threads", a.threads, "OpenMP threads for the tau sweep")->check(CLI::NonNegativeNumber);
        if (with_oracle) sub->add_flag("--oracle", a.oracle, "replace PDE data by the closed-form indicator");
        sub->callback([&command, name] { command = name; });
        return sub;
    };
    add("simulate", "solve the forward problem and write the boundary record", false);
    add("indicate", "compute indicator samples from the boundary record", true);
    add("extract", "fit the indicator decay and recover the geometry", false);
    add("pipeline", "simulate, indicate and extract", true);
    add("oracle", "write noise-free oracle indicator samples", false)
        ->add_option("--kind", a.kind, "exact-principal | two-layer-principal | layered-asymptotic | smooth-asymptotic");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : Validation;
    }
    return run(app, command, a);
}
