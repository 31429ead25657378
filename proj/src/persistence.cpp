#include "fga/persistence.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

namespace fga {

namespace {

std::string at(const std::string& path, const std::string& key) { return path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const Json& require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  return j;
}

void check_fields(const Json& j, const std::string& path, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional = {}) {
  require_object(j, path);
  std::set<std::string> known(required.begin(), required.end());
  known.insert(optional.begin(), optional.end());
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw SchemaError(at(path, key), "unknown field");
  for (const char* k : required)
    if (!j.contains(k)) throw SchemaError(at(path, k), "missing field");
}

double get_double(const Json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

std::int64_t get_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
  return j.get<std::int64_t>();
}

std::uint64_t get_uint(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned()) throw SchemaError(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

bool get_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) throw SchemaError(path, "expected a boolean");
  return j.get<bool>();
}

std::string get_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

const Json& get_array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  return j;
}

Json vector_json(const Vector<double>& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

template <typename T>
Json list_json(const std::vector<T>& v) {
  Json a = Json::array();
  for (const T& x : v) a.push_back(x);
  return a;
}

Vector<double> vector_from(const Json& j, const std::string& path) {
  get_array(j, path);
  Vector<double> v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = get_double(j[i], at(path, i));
  return v;
}

std::vector<Index> indices_from(const Json& j, const std::string& path) {
  get_array(j, path);
  std::vector<Index> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(static_cast<Index>(get_int(j[i], at(path, i))));
  return v;
}

Json model_json(const LinearModel<double>& m) { return Json{{"weights", vector_json(m.weights)}, {"bias", m.bias}}; }

LinearModel<double> model_from(const Json& j, const std::string& path) {
  check_fields(j, path, {"weights", "bias"});
  return {vector_from(j["weights"], at(path, "weights")), get_double(j["bias"], at(path, "bias"))};
}

bool all_finite_json(const Json& j) {
  if (j.is_number_float()) return std::isfinite(j.get<double>());
  if (j.is_structured())
    for (const auto& child : j)
      if (!all_finite_json(child)) return false;
  return true;
}

}  // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::Svm ? "svm" : "fga"; }

ModelDocument make_document(const LinearModel<double>& model, DocumentMetadata meta) {
  ModelDocument doc;
  doc.kind = ModelKind::Svm;
  doc.payload = model_json(model);
  doc.metadata = std::move(meta);
  return doc;
}

ModelDocument make_document(const FeatureGraph<double>& graph, DocumentMetadata meta) {
  ModelDocument doc;
  doc.kind = ModelKind::Fga;
  Json layers = Json::array();
  for (const auto& layer : graph.layers) {
    Json nodes = Json::array();
    for (const auto& nd : layer)
      nodes.push_back(Json{{"inputs", list_json(nd.inputs)},
                           {"weights", vector_json(nd.model.weights)},
                           {"bias", nd.model.bias},
                           {"retrained", nd.retrained}});
    layers.push_back(std::move(nodes));
  }
  doc.payload = Json{{"num_features", graph.layout.num_features},
                     {"group_size", graph.layout.group_size},
                     {"permutation", list_json(graph.permutation)},
                     {"layers", std::move(layers)}};
  doc.metadata = std::move(meta);
  return doc;
}

LinearModel<double> svm_from_document(const ModelDocument& doc) {
  if (doc.kind != ModelKind::Svm) throw SchemaError("$.kind", "expected an svm document, found " + to_string(doc.kind));
  return model_from(doc.payload, "$.payload");
}

FeatureGraph<double> graph_from_document(const ModelDocument& doc) {
  if (doc.kind != ModelKind::Fga) throw SchemaError("$.kind", "expected an fga document, found " + to_string(doc.kind));
  const Json& p = doc.payload;
  const std::string path = "$.payload";
  check_fields(p, path, {"num_features", "group_size", "permutation", "layers"});
  const Index d = static_cast<Index>(get_int(p["num_features"], at(path, "num_features")));
  const Index m = static_cast<Index>(get_int(p["group_size"], at(path, "group_size")));
  const Permutation perm = indices_from(p["permutation"], at(path, "permutation"));

  FeatureGraph<double> g;
  try {
    g = make_graph<double>(build_layout(d, m), perm);
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
  const std::string lpath = at(path, "layers");
  const Json& layers = get_array(p["layers"], lpath);
  if (static_cast<Index>(layers.size()) != g.num_layers())
    throw SchemaError(lpath, "expected " + std::to_string(g.num_layers()) + " layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string lp = at(lpath, l);
    const Json& nodes = get_array(layers[l], lp);
    if (nodes.size() != g.layers[l].size())
      throw SchemaError(lp, "expected " + std::to_string(g.layers[l].size()) + " nodes");
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const std::string np = at(lp, k);
      const Json& n = nodes[k];
      check_fields(n, np, {"inputs", "weights", "bias", "retrained"});
      Node<double>& nd = g.layers[l][k];
      if (indices_from(n["inputs"], at(np, "inputs")) != nd.inputs)
        throw SchemaError(at(np, "inputs"), "inconsistent with the layout and permutation");
      Vector<double> w = vector_from(n["weights"], at(np, "weights"));
      if (w.size() != static_cast<Index>(nd.inputs.size()))
        throw SchemaError(at(np, "weights"), "expected " + std::to_string(nd.inputs.size()) + " weights");
      nd.model.weights = std::move(w);
      nd.model.bias = get_double(n["bias"], at(np, "bias"));
      nd.retrained = get_bool(n["retrained"], at(np, "retrained"));
    }
  }
  return g;
}

Json metadata_json(const DocumentMetadata& meta) {
  Json j{{"dataset", meta.dataset}, {"seed", meta.seed}, {"config", meta.config}};
  if (meta.timestamp) j["timestamp"] = *meta.timestamp;
  return j;
}

Json to_json(const ModelDocument& doc) {
  return Json{{"format_version", doc.format_version},
              {"kind", to_string(doc.kind)},
              {"payload", doc.payload},
              {"metadata", metadata_json(doc.metadata)}};
}

ModelDocument document_from_json(const Json& j) {
  require_object(j, "$");
  if (!j.contains("format_version")) throw SchemaError("$.format_version", "missing field");
  const std::int64_t version = get_int(j["format_version"], "$.format_version");
  if (version != kFormatVersion)
    throw VersionError("unsupported format_version " + std::to_string(version) + " (this build reads " +
                       std::to_string(kFormatVersion) + ")");
  check_fields(j, "$", {"format_version", "kind", "payload", "metadata"});

  ModelDocument doc;
  const std::string kind = get_string(j["kind"], "$.kind");
  if (kind == "svm")
    doc.kind = ModelKind::Svm;
  else if (kind == "fga")
    doc.kind = ModelKind::Fga;
  else
    throw SchemaError("$.kind", "expected \"svm\" or \"fga\", found \"" + kind + "\"");

  const Json& meta = j["metadata"];
  check_fields(meta, "$.metadata", {"dataset", "seed", "config"}, {"timestamp"});
  doc.metadata.dataset = get_string(meta["dataset"], "$.metadata.dataset");
  doc.metadata.seed = get_uint(meta["seed"], "$.metadata.seed");
  doc.metadata.config = require_object(meta["config"], "$.metadata.config");
  if (meta.contains("timestamp")) doc.metadata.timestamp = get_string(meta["timestamp"], "$.metadata.timestamp");

  doc.payload = require_object(j["payload"], "$.payload");
  // Validate the payload eagerly so a bad document fails at load time.
  if (doc.kind == ModelKind::Svm)
    svm_from_document(doc);
  else
    graph_from_document(doc);
  return doc;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

void write_json_atomic(const Json& j, const std::filesystem::path& path) {
  if (!all_finite_json(j)) throw NumericError("refusing to write non-finite numbers to " + path.string());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << j.dump(2) << '\n';
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("$", std::string("malformed JSON in ") + path.string() + ": " + e.what());
  }
}

void save(const ModelDocument& doc, const std::filesystem::path& path, const SaveOptions& opts) {
  Json j = to_json(doc);
  if (opts.include_timestamp) j["metadata"]["timestamp"] = utc_timestamp();
  write_json_atomic(j, path);
}

ModelDocument load(const std::filesystem::path& path) { return document_from_json(read_json(path)); }

Json report_document(const std::string& name, Json payload, const DocumentMetadata& meta, const SaveOptions& opts) {
  Json m = metadata_json(meta);
  if (opts.include_timestamp) m["timestamp"] = utc_timestamp();
  return Json{{"format_version", kFormatVersion}, {"report", name}, {"metadata", std::move(m)}, {"payload", std::move(payload)}};
}

Json to_json(const TrainReport& rep) {
  Json updates = Json::array();
  for (const auto& u : rep.updates)
    updates.push_back(Json{{"sweep", u.sweep},
                           {"layer", u.layer},
                           {"position", u.position},
                           {"node_id", u.node_id},
                           {"candidate_error", u.candidate_error},
                           {"accepted", u.accepted}});
  return Json{{"initial_error", rep.initial_error},
              {"final_error", rep.final_error},
              {"sweeps_run", rep.sweeps_run},
              {"retrained_count", rep.retrained_count},
              {"sweep_errors", list_json(rep.sweep_errors)},
              {"updates", std::move(updates)}};
}

Json to_json(const BoundReport& rep) {
  const BoundInputs& b = rep.inputs;
  return Json{{"inputs", {{"r", b.r}, {"lambda", b.lambda}, {"m", b.m}, {"delta", b.delta}, {"eps_loss", b.eps_loss}, {"V", b.V}}},
              {"train_loss_svm", rep.train_loss_svm},
              {"train_loss_fga", rep.train_loss_fga},
              {"test_loss_svm", rep.test_loss_svm},
              {"test_loss_fga", rep.test_loss_fga},
              {"train_sse_svm", rep.train_sse_svm},
              {"train_sse_fga", rep.train_sse_fga},
              {"test_sse_svm", rep.test_sse_svm},
              {"test_sse_fga", rep.test_sse_fga},
              {"lhs_diff", rep.lhs_diff},
              {"rhs_diff", rep.rhs_diff},
              {"rhs_abs", rep.rhs_abs},
              {"satisfied", rep.satisfied},
              {"abs_satisfied", rep.abs_satisfied},
              {"confidence_diff", rep.confidence_diff},
              {"confidence_abs", rep.confidence_abs}};
}

Json to_json(const StabilityRun& run) {
  return Json{{"mean_norm", run.mean_norm}, {"max_norm", run.max_norm}, {"per_removal_norms", list_json(run.per_removal_norms)}};
}

Json to_json(const StabilityReport& rep) {
  return Json{{"svm", to_json(rep.svm)}, {"fga", to_json(rep.fga)}, {"ratio", rep.ratio}, {"predicted_beta", rep.predicted_beta}};
}

Json to_json(const std::vector<PermTrial>& trials) {
  Json a = Json::array();
  for (const auto& t : trials)
    a.push_back(Json{{"trial", t.trial},
                     {"perm_seed", t.perm_seed},
                     {"train_sse", t.train_sse},
                     {"retrained", t.retrained},
                     {"permutation", list_json(t.perm)}});
  return a;
}

Json to_json(const std::vector<TraceRow>& trace) {
  Json a = Json::array();
  for (const auto& r : trace)
    a.push_back(Json{{"improvement", r.improvement},
                     {"trial", r.trial},
                     {"best_error", r.best_error},
                     {"sig_count", r.sig_count},
                     {"sig_p_sum", r.sig_p_sum},
                     {"sig_p_mean", r.sig_p_mean},
                     {"sig_r_mean", r.sig_r_mean}});
  return a;
}

Json to_json(const ComplexityReport& rep) {
  return Json{{"dims", list_json(rep.dims)},
              {"seconds", list_json(rep.seconds)},
              {"slope", rep.fit.slope},
              {"intercept", rep.fit.intercept},
              {"residuals", list_json(rep.fit.residuals)},
              {"max_abs_residual", rep.fit.max_abs_residual}};
}

Json to_json(const SvrConfig& cfg) {
  return Json{{"C", cfg.C}, {"epsilon", cfg.epsilon}, {"tol", cfg.tol}, {"max_passes", cfg.max_passes}, {"scale", cfg.scale}};
}

Json to_json(const TrainConfig& cfg) {
  return Json{{"epsilon_stop", cfg.epsilon_stop}, {"max_sweeps", cfg.max_sweeps}, {"seed", cfg.seed}, {"svr", to_json(cfg.svr)}};
}

}  // namespace fga
