// JSON views of analysis results for the CLI. Key order is fixed so reports
// are byte-identical across runs.
#pragma once

#include <json.hpp>

#include "strandstate/envelope.hpp"
#include "strandstate/format.hpp"
#include "strandstate/verify.hpp"

namespace sst::report {

using Json = nlohmann::ordered_json;

Json header(const std::string& command);
Json bounds(const SearchBounds& b);
Json node(Node n);
Json stats(const TreeStats& s);
Json analysis(const AnalysisResult& r, bool with_tree);
Json violations(const std::vector<Violation>& vs);
Json compat_witness(const CompatibilityWitness& w);
Json bridge(const BridgeResult& b);
Json evidence(const VerifyResult& r, const Protocol& p);

}  // namespace sst::report
