#pragma once

#include <string>

#include "json.hpp"

#include "datagen.hpp"
#include "kms.hpp"
#include "stats.hpp"

namespace kms::serialize {

using Json = nlohmann::ordered_json;

Json kernel_json(const Kernel& k);
/// Field order is fixed; timings appear only when requested because they vary between runs.
Json result_json(const KmsResult& r, bool with_timings);
Json test_json(const TestResult& t);
Json sweep_json(const SweepResult& s, const SweepOptions& opts, const std::string& dataset);
/// CSV with header n,trial,statistic.
std::string sweep_csv(const SweepResult& s);
/// "n,a_x,a_y" rows, one per anchor index.
std::string projector_csv(const Projector& p);
/// iteration,value,step_norm
std::string trace_csv(const KmsDiagnostics& d);

Json dataset_spec_json(const DatasetSpec& spec);
/// d defaults by kind when absent. Unknown kind -> UsageError listing the kinds.
DatasetSpec dataset_spec_from_json(const Json& j);
DatasetSpec dataset_spec_from_text(const std::string& text);

std::string dump(const Json& j);

}  // namespace kms::serialize
