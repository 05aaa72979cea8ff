#include "semqo/model_backend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "semqo/expr.hpp"
#include "semqo/rules.hpp"

namespace semqo {

TaskKind task_kind_for(OperatorKind kind) {
  return (kind == OperatorKind::Filter || kind == OperatorKind::ComputeFilter)
             ? TaskKind::Binary
             : TaskKind::Freeform;
}

std::optional<bool> parse_binary_label(const std::string& reply) {
  std::string norm = normalize_text(reply);
  if (norm == "true" || norm == "yes" || norm == "1") return true;
  if (norm == "false" || norm == "no" || norm == "0") return false;
  return std::nullopt;
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || a.size() != b.size()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace

bool semantically_equal(const std::string& a, const std::string& b,
                        TaskKind task, const EqualityConfig& eq) {
  if (task == TaskKind::Binary) {
    auto la = parse_binary_label(a);
    auto lb = parse_binary_label(b);
    if (la && lb) return *la == *lb;
    return normalize_text(a) == normalize_text(b);
  }
  if (eq.embedder) {
    return cosine(eq.embedder(a), eq.embedder(b)) >= eq.cosine_threshold;
  }
  return normalize_text(a) == normalize_text(b);
}

// ---------------------------------------------------------------------------
// ModelLadder
// ---------------------------------------------------------------------------

ModelLadder::ModelLadder(std::vector<LadderModel> models)
    : models_(std::move(models)) {
  if (models_.empty()) throw InputError("model ladder must not be empty");
  for (std::size_t i = 1; i < models_.size(); ++i) {
    if (models_[i].price.input_per_token <= models_[i - 1].price.input_per_token) {
      throw InputError("ladder prices must strictly increase with capability");
    }
  }
}

std::size_t ModelLadder::index_of(const std::string& model_id) const {
  for (std::size_t i = 0; i < models_.size(); ++i) {
    if (models_[i].id == model_id) return i;
  }
  throw InputError("model not in ladder: " + model_id);
}

std::string ModelLadder::invoke(std::size_t model_index, OperatorKind kind,
                                const std::string& instruction,
                                const std::string& input) const {
  const auto& model = models_.at(model_index);
  model.calls->fetch_add(1, std::memory_order_relaxed);
  return model.backend->invoke(kind, instruction, input);
}

std::uint64_t ModelLadder::calls(std::size_t model_index) const {
  return models_.at(model_index).calls->load(std::memory_order_relaxed);
}

std::map<std::string, std::uint64_t> ModelLadder::call_counts() const {
  std::map<std::string, std::uint64_t> out;
  for (const auto& m : models_) out[m.id] = m.calls->load();
  return out;
}

void ModelLadder::reset_counters() const {
  for (const auto& m : models_) m.calls->store(0);
}

PricingTable ModelLadder::pricing() const {
  PricingTable table;
  for (const auto& m : models_) table.per_model[m.id] = m.price;
  return table;
}

// ---------------------------------------------------------------------------
// Mock ensemble
// ---------------------------------------------------------------------------

std::uint64_t stable_hash64(std::uint64_t seed, const std::string& text) {
  // FNV-1a, seed-mixed.
  std::uint64_t h = 14695981039346656037ull ^ (seed * 0x9e3779b97f4a7c15ull);
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return h;
}

namespace {

double unit_interval(std::uint64_t h) {
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);  // 2^53
}

}  // namespace

MockEnsembleSpec mock_spec_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed mock spec: ") + e.what());
  }
  MockEnsembleSpec spec;
  if (doc.contains("accuracies")) {
    spec.accuracies = doc["accuracies"].get<std::vector<double>>();
  }
  if (doc.contains("violation_rate")) {
    spec.violation_rate = doc["violation_rate"].get<double>();
  }
  if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("distractor_pool")) {
    spec.distractor_pool = doc["distractor_pool"].get<std::size_t>();
  }
  if (doc.contains("vocabulary")) {
    spec.vocabulary = doc["vocabulary"].get<std::vector<std::string>>();
  }
  if (doc.contains("prices")) {
    for (const auto& entry : doc["prices"]) {
      spec.prices.push_back({entry.at("input").get<double>(),
                             entry.at("output").get<double>()});
    }
  }
  return spec;
}

MockEnsemble::MockEnsemble(MockEnsembleSpec spec, std::size_t ladder_size)
    : spec_(std::move(spec)), ladder_size_(ladder_size) {
  if (spec_.accuracies.size() != ladder_size_) {
    throw InputError("mock spec accuracy count must match ladder length");
  }
  for (std::size_t i = 1; i < spec_.accuracies.size(); ++i) {
    if (spec_.accuracies[i] < spec_.accuracies[i - 1]) {
      throw InputError("mock accuracies must be nondecreasing along the ladder");
    }
  }
  if (spec_.distractor_pool < 1) {
    throw InputError("distractor pool size must be >= 1");
  }
}

void MockEnsemble::script(std::vector<ScriptedItem> items, TaskKind task) {
  items_ = std::move(items);
  scripted_task_ = task;
  item_by_input_.clear();
  const std::size_t n = items_.size();
  for (std::size_t i = 0; i < n; ++i) item_by_input_.emplace(items_[i].input, i);

  // Nested correct sets: prefixes of one seeded shuffle, of exact size
  // llround(accuracy_k * n) per model.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec_.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> rank(n);
  for (std::size_t pos = 0; pos < n; ++pos) rank[order[pos]] = pos;

  correct_.assign(ladder_size_, std::vector<bool>(n, false));
  for (std::size_t k = 0; k < ladder_size_; ++k) {
    auto limit = static_cast<std::size_t>(
        std::llround(spec_.accuracies[k] * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) correct_[k][i] = rank[i] < limit;
  }

  // Violations break nesting on a seed-chosen fraction of items: one link
  // per item gets "weaker right, stronger wrong".
  auto violated = static_cast<std::size_t>(
      std::llround(spec_.violation_rate * static_cast<double>(n)));
  if (violated > 0 && ladder_size_ >= 2) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    std::mt19937_64 vrng(spec_.seed ^ 0xBADC0FFEE0DDF00Dull);
    std::shuffle(pool.begin(), pool.end(), vrng);
    std::uniform_int_distribution<std::size_t> link(1, ladder_size_ - 1);
    for (std::size_t v = 0; v < std::min(violated, n); ++v) {
      std::size_t item = pool[v];
      std::size_t s = link(vrng);
      correct_[s - 1][item] = true;
      correct_[s][item] = false;
    }
  }
}

bool MockEnsemble::scripted_correct(std::size_t model_index,
                                    std::size_t item_index) const {
  return correct_.at(model_index).at(item_index);
}

bool MockEnsemble::unscripted_correct(std::size_t model_index,
                                      const std::string& key) const {
  // One uniform draw per key keeps the correct sets nested.
  double u = unit_interval(stable_hash64(spec_.seed, key));
  bool base = u < spec_.accuracies[model_index];
  double uv = unit_interval(stable_hash64(spec_.seed ^ 0xA5A5A5A5ull, key));
  if (uv < spec_.violation_rate && ladder_size_ >= 2) {
    std::size_t s =
        1 + stable_hash64(spec_.seed ^ 0x5A5A5A5Aull, key) % (ladder_size_ - 1);
    if (model_index == s - 1) return true;
    if (model_index == s) return false;
  }
  return base;
}

std::string MockEnsemble::truth_for(OperatorKind kind,
                                    const std::string& instruction,
                                    const std::string& input) const {
  auto scripted = item_by_input_.find(input);
  if (scripted != item_by_input_.end()) {
    return items_[scripted->second].answer;
  }
  switch (kind) {
    case OperatorKind::Filter:
    case OperatorKind::ComputeFilter: {
      if (auto expr_text = builtin_synthesize(OperatorKind::Filter, instruction)) {
        try {
          return Expr::parse(*expr_text).evaluate_predicate(input) ? "true"
                                                                   : "false";
        } catch (const EvalError&) {
          return "false";
        }
      }
      std::string norm_instruction = normalize_text(instruction);
      std::string norm_input = normalize_text(input);
      for (const auto& word : spec_.vocabulary) {
        std::string w = normalize_text(word);
        if (norm_instruction.find(w) != std::string::npos) {
          return norm_input.find(w) != std::string::npos ? "true" : "false";
        }
      }
      return stable_hash64(spec_.seed, "filter:" + instruction + "\x1f" + input) % 2
                 ? "true"
                 : "false";
    }
    case OperatorKind::Map:
    case OperatorKind::ComputeMap: {
      std::string norm_input = normalize_text(input);
      for (const auto& word : spec_.vocabulary) {
        std::string w = normalize_text(word);
        if (norm_input.find(w) != std::string::npos) return w;
      }
      if (!spec_.vocabulary.empty()) return "unknown";
      return "derived:" +
             std::to_string(stable_hash64(spec_.seed, "map:" + input) % 100000);
    }
    case OperatorKind::Rank: {
      double num;
      if (try_parse_number(input, num)) return std::to_string(num);
      return std::to_string(stable_hash64(spec_.seed, "rank:" + input) % 1000);
    }
    case OperatorKind::Reduce:
    case OperatorKind::ComputeReduce:
    default:
      return "aggregate:" +
             std::to_string(stable_hash64(spec_.seed, "reduce:" + input) % 1000000);
  }
}

std::string MockEnsemble::wrong_answer(std::size_t model_index,
                                       OperatorKind kind,
                                       const std::string& truth,
                                       const std::string& key) const {
  if (auto label = parse_binary_label(truth)) {
    // Two-valued codomain: every wrong model gives the flipped label.
    return *label ? "false" : "true";
  }
  (void)kind;
  std::size_t d = stable_hash64(spec_.seed ^ 0xD157ull,
                                key + "#" + std::to_string(model_index)) %
                  spec_.distractor_pool;
  return "distractor:" + std::to_string(d) + ":" +
         std::to_string(stable_hash64(spec_.seed, key) % 100000);
}

std::string MockEnsemble::respond(std::size_t model_index, OperatorKind kind,
                                  const std::string& instruction,
                                  const std::string& input) const {
  std::string key = instruction + "\x1f" + input;
  auto scripted = item_by_input_.find(input);
  bool correct;
  std::string truth;
  if (scripted != item_by_input_.end()) {
    truth = items_[scripted->second].answer;
    correct = correct_[model_index][scripted->second];
  } else {
    truth = truth_for(kind, instruction, input);
    correct = unscripted_correct(model_index, key);
  }
  return correct ? truth : wrong_answer(model_index, kind, truth, key);
}

namespace {

class MockModelBackend : public ModelBackend {
 public:
  MockModelBackend(std::shared_ptr<MockEnsemble> ensemble, std::size_t index)
      : ensemble_(std::move(ensemble)), index_(index) {}

  std::string invoke(OperatorKind kind, const std::string& instruction,
                     const std::string& input) override {
    return ensemble_->respond(index_, kind, instruction, input);
  }

 private:
  std::shared_ptr<MockEnsemble> ensemble_;
  std::size_t index_;
};

}  // namespace

MockLadder build_mock_ladder(const MockEnsembleSpec& spec,
                             std::vector<ScriptedItem> truth, TaskKind task) {
  const std::size_t L = spec.accuracies.size();
  if (L < 1) throw InputError("mock spec needs at least one accuracy");
  auto ensemble = std::make_shared<MockEnsemble>(spec, L);
  if (!truth.empty()) ensemble->script(std::move(truth), task);

  std::vector<LadderModel> models;
  for (std::size_t i = 0; i < L; ++i) {
    LadderModel model;
    model.id = (i + 1 == L && L > 1) ? "m*" : "m" + std::to_string(i + 1);
    if (i < spec.prices.size()) {
      model.price = spec.prices[i];
    } else {
      // Default ladder spans 100x from weakest to strongest.
      double scale = L > 1 ? std::pow(100.0, static_cast<double>(i) /
                                                 static_cast<double>(L - 1))
                           : 1.0;
      model.price.input_per_token = 1e-7 * scale;
      model.price.output_per_token = 4e-7 * scale;
    }
    model.backend = std::make_shared<MockModelBackend>(ensemble, i);
    models.push_back(std::move(model));
  }
  return {ModelLadder(std::move(models)), std::move(ensemble)};
}

}  // namespace semqo
