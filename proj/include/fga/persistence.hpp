#pragma once

#include "fga/analysis.hpp"
#include "fga/common.hpp"
#include "fga/graph.hpp"
#include "fga/permutation.hpp"
#include "fga/svr.hpp"
#include "fga/training.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace fga {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// Schema violation; the message starts with the JSON path of the offending
/// field, e.g. "$.payload.layers[0][1].weights".
class SchemaError : public DataError {
 public:
  SchemaError(const std::string& path, const std::string& what) : DataError(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class VersionError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

enum class ModelKind { Svm, Fga };

std::string to_string(ModelKind kind);

struct DocumentMetadata {
  std::string dataset;
  std::uint64_t seed = 0;
  /// Free-form echo of the resolved run configuration.
  Json config = Json::object();
  std::optional<std::string> timestamp;
};

struct ModelDocument {
  int format_version = kFormatVersion;
  ModelKind kind = ModelKind::Svm;
  Json payload = Json::object();
  DocumentMetadata metadata;
};

struct SaveOptions {
  /// Stamp the current UTC time into metadata.timestamp. Off by default so
  /// repeated saves are byte-identical.
  bool include_timestamp = false;
};

ModelDocument make_document(const LinearModel<double>& model, DocumentMetadata meta = {});
ModelDocument make_document(const FeatureGraph<double>& graph, DocumentMetadata meta = {});

/// Throw SchemaError if the document holds the other kind or a malformed
/// payload.
LinearModel<double> svm_from_document(const ModelDocument& doc);
FeatureGraph<double> graph_from_document(const ModelDocument& doc);

Json to_json(const ModelDocument& doc);
/// Strict: unknown or missing fields raise SchemaError, a format_version
/// other than kFormatVersion raises VersionError.
ModelDocument document_from_json(const Json& j);

void save(const ModelDocument& doc, const std::filesystem::path& path, const SaveOptions& opts = {});
ModelDocument load(const std::filesystem::path& path);

/// Pretty-printed JSON written to a sibling temp file and renamed into place.
/// Rejects non-finite numbers.
void write_json_atomic(const Json& j, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

std::string utc_timestamp();

Json metadata_json(const DocumentMetadata& meta);

// ---------------------------------------------------------------------------
// Reports. Each is wrapped as {format_version, report, metadata, payload}.

Json report_document(const std::string& name, Json payload, const DocumentMetadata& meta,
                     const SaveOptions& opts = {});

Json to_json(const TrainReport& rep);
Json to_json(const BoundReport& rep);
Json to_json(const StabilityRun& run);
Json to_json(const StabilityReport& rep);
Json to_json(const std::vector<PermTrial>& trials);
Json to_json(const std::vector<TraceRow>& trace);
Json to_json(const ComplexityReport& rep);
Json to_json(const SvrConfig& cfg);
Json to_json(const TrainConfig& cfg);

}  // namespace fga
