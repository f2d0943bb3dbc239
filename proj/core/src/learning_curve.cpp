#include "skillsim/learning_curve.hpp"

#include <fstream>

#include "skillsim/ranking.hpp"

namespace skillsim {

CurvePoint evaluate_snapshot(const EncoderModel& model,
                             const EvalBundle& bundle, std::uint64_t step) {
  VectorIndex index = VectorIndex::build(bundle.corpus, model);
  RunFile run;
  run.tag = "snapshot";
  for (const auto& [query_id, title] : bundle.queries) {
    run.add(index.rank(model.encode(title), 0, query_id));
  }
  MetricsReport report = evaluate_run(run, bundle.qrels);
  CurvePoint point;
  point.step = step;
  point.map = report.mean.ap;
  point.p5 = report.mean.p5;
  point.p20 = report.mean.p20;
  return point;
}

std::vector<CurvePoint> learning_curve(const SnapshotTrainer& trainer,
                                       const EvalBundle& bundle,
                                       std::uint64_t interval,
                                       const std::string& csv_path) {
  if (interval == 0) {
    throw std::runtime_error("learning_curve: interval must be >= 1");
  }
  std::ofstream csv;
  if (!csv_path.empty()) {
    csv.open(csv_path, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write curve: " + csv_path);
    csv << "step,map,p5,p20\n";
    csv.flush();
  }

  std::vector<CurvePoint> rows;
  EncoderTrainOptions options;
  options.snapshot_every = interval;
  options.snapshot = [&](std::uint64_t step, const EncoderModel& model) {
    if (!rows.empty() && rows.back().step == step) return;  // final dedup
    CurvePoint point = evaluate_snapshot(model, bundle, step);
    rows.push_back(point);
    if (csv.is_open()) {
      csv << point.step << ',' << point.map << ',' << point.p5 << ','
          << point.p20 << '\n';
      csv.flush();
    }
  };
  trainer(options);
  return rows;
}

void write_curve_csv(const std::string& path,
                     const std::vector<CurvePoint>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write curve: " + path);
  out << "step,map,p5,p20\n";
  for (const CurvePoint& point : rows) {
    out << point.step << ',' << point.map << ',' << point.p5 << ','
        << point.p20 << '\n';
  }
}

}  // namespace skillsim
