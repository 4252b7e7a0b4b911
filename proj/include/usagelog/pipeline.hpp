#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "usagelog/config.hpp"
#include "usagelog/error.hpp"
#include "usagelog/requesters.hpp"

namespace usagelog {

/// Collection statistics plus per-stage summaries. Timings are kept apart
/// (timings.json) so reruns over the same input produce identical reports.
struct PipelineReport {
  std::size_t events = 0;
  std::size_t referent_instances = 0;
  std::size_t unique_referents = 0;  // clusters
  std::size_t unique_requesters = 0;
  std::size_t sessions = 0;
  std::map<std::string, double> genre_shares;  // fraction of unique referents
  std::size_t heavy_hitters = 0;
  bool requester_fit = false;
  PowerLawFit fit;
  std::string weight_mode;
  std::string graph_mode;
  std::size_t article_nodes = 0;
  std::size_t article_edges = 0;
  double article_weight = 0.0;
  std::size_t journal_nodes = 0;
  std::size_t journal_edges = 0;
  double journal_weight = 0.0;
  double intra_journal_weight = 0.0;
  double unassigned_weight = 0.0;
  std::size_t unassigned_clusters = 0;
  std::size_t pagerank_iterations = 0;
  bool pagerank_converged = false;
  std::size_t map_points = 0;
  std::array<double, 2> map_explained{0.0, 0.0};
  bool map_degenerate = false;
  std::size_t ranking_rows = 0;
  std::size_t flagged_rows = 0;
  std::vector<std::string> notes;
  std::map<std::string, double> timings_seconds;
};

std::string report_to_json(const PipelineReport& r);
PipelineReport report_from_json(const std::string& text);

/// Raised for a failure inside a named stage.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const Error& cause)
      : Error(cause.code(), "stage " + stage + ": " + cause.what()), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

const std::vector<std::string>& pipeline_stages();

struct PipelineOptions {
  /// Continue from the stages a previous interrupted run completed.
  bool resume = true;
  /// Called after each stage computed by this run is persisted; stages
  /// replayed from a previous run are skipped.
  std::function<void(const std::string& stage)> after_stage;
};

/// Runs every stage over the store and publishes the artifacts directory.
/// Stage outputs accumulate in `<artifacts>.work` and replace the previous
/// artifacts only when the whole run succeeds.
PipelineReport run_pipeline(const PipelineConfig& config, const PipelineOptions& options = {});

}  // namespace usagelog
