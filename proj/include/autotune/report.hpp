#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "autotune/analysis.hpp"
#include "autotune/experiment.hpp"
#include "autotune/tuner.hpp"

namespace autotune {

// Round-trippable number text (%.17g; inf and nan spelled out).
std::string format_number(double v);

// Trace CSV: t,index,<param labels...>,y,kappa,best
void write_trace_csv(std::ostream& out, const ConfigSpace& space, const RunTrace& trace);
// Points are rebuilt from the index column when a space is given.
RunTrace read_trace_csv(std::istream& in, const ConfigSpace* space = nullptr);

// One row per iteration per statistic: algorithm,t,statistic,value
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateReport>& reports);

// Model-guided iterations only: algorithm,replication,t,overhead_ms
void write_overhead_csv(std::ostream& out, const std::vector<AlgorithmRuns>& runs);

void write_merit_csv(std::ostream& out, const ConfigSpace& space, const std::vector<MeritReport>& ranking);
void write_snr_csv(std::ostream& out, const std::vector<SnrRow>& rows);

std::string trace_file_name(const std::string& algorithm, std::size_t replication);

// Writes traces/, aggregate.csv, overhead.csv and summary.json under spec.out.
void write_experiment(const ExperimentSpec& spec, const Problem& problem, const ExperimentResult& result);

// Rebuilds aggregate.csv content from the summary and trace files of an
// output directory.
std::string reaggregate(const std::string& out_dir);

std::vector<AggregateReport> aggregate(const ExperimentResult& result);

}  // namespace autotune
