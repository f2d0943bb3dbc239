#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "skillsim/encoder.hpp"
#include "skillsim/evalkit.hpp"

namespace skillsim {

struct EvalBundle {
  std::vector<std::pair<std::string, std::string>> corpus;
  std::vector<std::pair<std::string, std::string>> queries;
  QrelsSet qrels;
};

struct CurvePoint {
  std::uint64_t step = 0;
  double map = 0.0;
  double p5 = 0.0;
  double p20 = 0.0;
};

/// Ranks the eval corpus with a model snapshot and reports MAP/P@5/P@20.
CurvePoint evaluate_snapshot(const EncoderModel& model,
                             const EvalBundle& bundle, std::uint64_t step);

/// Any trainer that honors EncoderTrainOptions snapshot callbacks.
using SnapshotTrainer = std::function<void(const EncoderTrainOptions&)>;

/// Runs `trainer`, evaluating every `interval` optimizer steps (plus step 0
/// and the final step). Rows are appended and flushed to `csv_path` as they
/// are produced, so an aborted run keeps its partial curve. Pass an empty
/// path to skip the file.
std::vector<CurvePoint> learning_curve(const SnapshotTrainer& trainer,
                                       const EvalBundle& bundle,
                                       std::uint64_t interval,
                                       const std::string& csv_path = "");

void write_curve_csv(const std::string& path,
                     const std::vector<CurvePoint>& rows);

}  // namespace skillsim
