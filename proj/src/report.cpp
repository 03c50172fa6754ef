#include "autotune/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "autotune/errors.hpp"
#include "autotune/keyvalue.hpp"

namespace autotune {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kStatistics[] = {"mean", "median", "q25", "q75", "min", "max"};

double stat_value(const CurveStats& s, std::size_t k) {
    switch (k) {
        case 0:
            return s.mean;
        case 1:
            return s.median;
        case 2:
            return s.q25;
        case 3:
            return s.q75;
        case 4:
            return s.min;
        default:
            return s.max;
    }
}

json point_json(const ConfigSpace& space, const ConfigPoint& x) {
    json j = json::object();
    if (x.coords.size() != space.dims()) {
        return j;
    }
    for (std::size_t l = 0; l < space.dims(); ++l) {
        j[space.params()[l].name()] = space.params()[l].labels()[x.coords[l]];
    }
    return j;
}

json number_json(double v) { return std::isfinite(v) ? json(v) : json(format_number(v)); }

json hyper_json(const Hyperparams& h) {
    return {{"kernel", to_string(h.kernel.family)},
            {"amplitude", h.kernel.amplitude},
            {"scales", h.kernel.scales},
            {"mean", to_string(h.mean.form)},
            {"mean_offset", h.mean.offset},
            {"mean_slopes", h.mean.slopes},
            {"noise_variance", h.noise_variance}};
}

double parse_field(const std::string& text, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) {
            throw ParseError(line, "");
        }
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, "bad number '" + text + "'");
    }
}

double reference_minimum(const ExperimentResult& result) {
    if (result.ground_truth) {
        return *result.ground_truth;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& runs : result.runs) {
        for (const auto& t : runs.traces) {
            best = std::min(best, t.best_y);
        }
    }
    return best;
}

std::string aggregate_text(const std::vector<AggregateReport>& reports) {
    std::ostringstream out;
    write_aggregate_csv(out, reports);
    return out.str();
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace_csv(std::ostream& out, const ConfigSpace& space, const RunTrace& trace) {
    out << "t,index";
    for (const auto& p : space.params()) {
        out << ',' << p.name();
    }
    out << ",y,kappa,best\n";
    for (const auto& r : trace.records) {
        out << r.t << ',' << space.linear_index(r.point);
        for (std::size_t l = 0; l < space.dims(); ++l) {
            out << ',' << space.params()[l].labels()[r.point.coords[l]];
        }
        out << ',' << format_number(r.y) << ',' << format_number(r.kappa) << ',' << format_number(r.best) << '\n';
    }
}

RunTrace read_trace_csv(std::istream& in, const ConfigSpace* space) {
    RunTrace trace;
    std::string line;
    std::size_t row = 0;
    std::size_t columns = 0;
    trace.best_y = std::numeric_limits<double>::infinity();
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(line, ',');
        if (columns == 0) {
            if (cells.size() < 5 || cells[0] != "t" || cells[1] != "index" || cells.back() != "best") {
                throw ParseError(row, "not a trace file header");
            }
            columns = cells.size();
            continue;
        }
        if (cells.size() != columns) {
            throw ParseError(row, "expected " + std::to_string(columns) + " fields");
        }
        TraceRecord r;
        r.t = static_cast<std::size_t>(parse_field(cells[0], row));
        const auto index = static_cast<std::size_t>(parse_field(cells[1], row));
        if (space != nullptr) {
            if (index >= space->size()) {
                throw ParseError(row, "index outside the space");
            }
            r.point = space->point_at(index);
        }
        r.y = parse_field(cells[columns - 3], row);
        r.kappa = parse_field(cells[columns - 2], row);
        r.best = parse_field(cells[columns - 1], row);
        if (r.y < trace.best_y) {
            trace.best_y = r.y;
            trace.best_point = r.point;
        }
        if (!std::isfinite(r.y)) {
            ++trace.failures;
        }
        trace.records.push_back(std::move(r));
    }
    if (columns == 0) {
        throw ParseError(row, "missing header");
    }
    return trace;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateReport>& reports) {
    out << "algorithm,t,statistic,value\n";
    for (const auto& rep : reports) {
        for (std::size_t i = 0; i < rep.per_iteration.size(); ++i) {
            for (std::size_t k = 0; k < std::size(kStatistics); ++k) {
                out << rep.algorithm << ',' << i + 1 << ',' << kStatistics[k] << ','
                    << format_number(stat_value(rep.per_iteration[i], k)) << '\n';
            }
        }
    }
}

void write_overhead_csv(std::ostream& out, const std::vector<AlgorithmRuns>& runs) {
    out << "algorithm,replication,t,overhead_ms\n";
    for (const auto& a : runs) {
        for (std::size_t rep = 0; rep < a.traces.size(); ++rep) {
            for (const auto& r : a.traces[rep].records) {
                if (std::isnan(r.kappa)) {
                    continue;
                }
                out << a.algorithm << ',' << rep << ',' << r.t << ',' << format_number(r.overhead_ms) << '\n';
            }
        }
    }
}

void write_merit_csv(std::ostream& out, const ConfigSpace& space, const std::vector<MeritReport>& ranking) {
    out << "rank,subset,size,merit,mean_label_correlation,mean_inter_correlation\n";
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        const auto& m = ranking[i];
        std::string names;
        for (auto l : m.subset) {
            names += (names.empty() ? "" : ";") + space.params()[l].name();
        }
        out << i + 1 << ',' << names << ',' << m.subset.size() << ',' << format_number(m.merit) << ','
            << format_number(m.mean_label_correlation) << ',' << format_number(m.mean_inter_correlation) << '\n';
    }
}

void write_snr_csv(std::ostream& out, const std::vector<SnrRow>& rows) {
    out << "family,samples,mean,sigma,snr,mean_ci_low,mean_ci_high,sigma_ci_low,sigma_ci_high\n";
    for (const auto& r : rows) {
        out << r.family << ',' << r.samples << ',' << format_number(r.mean) << ',' << format_number(r.sigma) << ','
            << format_number(r.ratio) << ',' << format_number(r.mean_ci[0]) << ',' << format_number(r.mean_ci[1])
            << ',' << format_number(r.sigma_ci[0]) << ',' << format_number(r.sigma_ci[1]) << '\n';
    }
}

std::string trace_file_name(const std::string& algorithm, std::size_t replication) {
    return algorithm + "_rep" + std::to_string(replication) + ".csv";
}

std::vector<AggregateReport> aggregate(const ExperimentResult& result) {
    const double gt = reference_minimum(result);
    std::vector<AggregateReport> reports;
    for (const auto& a : result.runs) {
        auto rep = distance_curve(a.traces, gt);
        rep.algorithm = a.algorithm;
        reports.push_back(std::move(rep));
    }
    return reports;
}

void write_experiment(const ExperimentSpec& spec, const Problem& problem, const ExperimentResult& result) {
    const fs::path root(spec.out);
    fs::create_directories(root / "traces");
    const auto& space = problem.space;
    for (const auto& a : result.runs) {
        for (std::size_t rep = 0; rep < a.traces.size(); ++rep) {
            std::ofstream f(root / "traces" / trace_file_name(a.algorithm, rep));
            write_trace_csv(f, space, a.traces[rep]);
        }
    }
    const auto reports = aggregate(result);
    {
        std::ofstream f(root / "aggregate.csv");
        f << aggregate_text(reports);
    }
    {
        std::ofstream f(root / "overhead.csv");
        write_overhead_csv(f, result.runs);
    }

    json summary;
    summary["seed"] = spec.seed;
    summary["replications"] = spec.replications;
    summary["kappa"] = spec.kappa;
    summary["kernel"] = to_string(spec.kernel);
    summary["mean"] = to_string(spec.mean);
    summary["learn_cycle"] = spec.learn_cycle;
    summary["space_size"] = space.size();
    summary["reference_minimum"] = number_json(reference_minimum(result));
    if (problem.truth) {
        summary["ground_truth"] = {{"minimum", problem.truth->minimum},
                                   {"point", point_json(space, problem.truth->argmin)}};
    } else {
        summary["ground_truth"] = nullptr;
    }
    json algorithms = json::array();
    for (std::size_t ai = 0; ai < result.runs.size(); ++ai) {
        const auto& a = result.runs[ai];
        json runs = json::array();
        for (std::size_t rep = 0; rep < a.traces.size(); ++rep) {
            const auto& t = a.traces[rep];
            json run = {{"replication", rep},
                        {"seed", t.seed},
                        {"trace", "traces/" + trace_file_name(a.algorithm, rep)},
                        {"evaluations", t.records.size()},
                        {"failures", t.failures},
                        {"best_y", number_json(t.best_y)},
                        {"best_point", point_json(space, t.best_point)}};
            run["hyperparameters"] = t.hyper ? hyper_json(*t.hyper) : json(nullptr);
            runs.push_back(std::move(run));
        }
        json entry = {{"name", a.algorithm}, {"runs", std::move(runs)}};
        if (!reports[ai].per_iteration.empty()) {
            entry["final_median_distance"] = number_json(reports[ai].per_iteration.back().median);
        }
        entry["warnings"] = reports[ai].warnings;
        algorithms.push_back(std::move(entry));
    }
    summary["algorithms"] = std::move(algorithms);
    if (problem.dataset && problem.dataset->row_count() >= 3) {
        json merit = json::array();
        const auto ranking = rank_subsets(*problem.dataset, std::min<std::size_t>(3, space.dims()));
        for (std::size_t i = 0; i < std::min<std::size_t>(10, ranking.size()); ++i) {
            json names = json::array();
            for (auto l : ranking[i].subset) {
                names.push_back(space.params()[l].name());
            }
            merit.push_back({{"subset", names}, {"merit", ranking[i].merit}});
        }
        summary["merit"] = std::move(merit);
    }
    std::ofstream f(root / "summary.json");
    f << summary.dump(2) << '\n';
}

std::string reaggregate(const std::string& out_dir) {
    const fs::path root(out_dir);
    std::ifstream sf(root / "summary.json");
    if (!sf) {
        throw ConfigError("no summary.json in " + out_dir);
    }
    json summary;
    try {
        summary = json::parse(sf);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("summary.json: ") + e.what());
    }
    const auto& ref = summary.at("reference_minimum");
    const double gt = ref.is_string() ? std::stod(ref.get<std::string>()) : ref.get<double>();
    std::vector<AggregateReport> reports;
    for (const auto& a : summary.at("algorithms")) {
        std::vector<RunTrace> traces;
        for (const auto& run : a.at("runs")) {
            std::ifstream tf(root / run.at("trace").get<std::string>());
            if (!tf) {
                throw ConfigError("missing trace " + run.at("trace").get<std::string>());
            }
            traces.push_back(read_trace_csv(tf));
        }
        auto rep = distance_curve(traces, gt);
        rep.algorithm = a.at("name").get<std::string>();
        reports.push_back(std::move(rep));
    }
    return aggregate_text(reports);
}

}  // namespace autotune
