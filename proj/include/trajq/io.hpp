#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "trajq/hardware.hpp"
#include "trajq/metrics.hpp"
#include "trajq/model.hpp"
#include "trajq/qubo.hpp"
#include "trajq/solvers.hpp"

namespace trajq {

using json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; keys sorted, so output is canonical.
void write_json_file(const std::filesystem::path& path, const json& doc);

// 64-bit FNV-1a as 16 hex digits.
std::string content_hash(const std::string& bytes);
std::string content_hash(const json& doc);

json to_json(const ProblemSpec& spec);
ProblemSpec problem_from_json(const json& doc);

json to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const json& doc);

json to_json(const GeneratorParams& params);
// Missing keys keep their defaults.
GeneratorParams generator_from_json(const json& doc, GeneratorParams base = {});

json to_json(const EncodingScheme& scheme);
EncodingScheme encoding_from_json(const json& doc);

// QUBO artifact: dimension, upper-triangular terms [i, j, value] with linear
// terms at i == j, offset, variable_map, layout (with the encoding), provenance.
json to_json(const QuadraticProgram& qp);
QuadraticProgram qubo_from_json(const json& doc);

json to_json(const Embedding& emb);
Embedding embedding_from_json(const json& doc);

// {"side": s, "inactive_qubits": [...], "inactive_couplers": [[a, b], ...]}
json to_json(const ChimeraGraph& graph);
ChimeraGraph hardware_from_json(const json& doc);

json to_json(const Sample& sample, Vartype vartype);
// One JSON object per distinct (state, gauge), energy ascending.
std::string to_jsonl(const SampleSet& samples);

json to_json(const AnnealConfig& config);
AnnealConfig anneal_from_json(const json& doc, AnnealConfig base = {});
json to_json(const PipelineConfig& config);
PipelineConfig pipeline_from_json(const json& doc, PipelineConfig base = {});

json to_json(const ExperimentRow& row);
ExperimentRow row_from_json(const json& doc);

}  // namespace trajq
