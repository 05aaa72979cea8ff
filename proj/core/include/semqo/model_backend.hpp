#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semqo/plan.hpp"

namespace semqo {

enum class TaskKind { Binary, Freeform };

/// filter -> binary; map/reduce/rank -> freeform.
TaskKind task_kind_for(OperatorKind kind);

/// Optional freeform embedder; maps text to a dense vector.
using Embedder = std::function<std::vector<double>(const std::string&)>;

struct EqualityConfig {
  Embedder embedder;                 // empty -> normalized-text fallback
  double cosine_threshold = 0.85;
};

/// Binary tasks compare normalized labels; freeform tasks use cosine
/// similarity under the embedder when provided, otherwise normalized-text
/// equality.
bool semantically_equal(const std::string& a, const std::string& b,
                        TaskKind task, const EqualityConfig& eq = {});

/// Normalizes a reply to "true"/"false" when it reads as a boolean label;
/// returns nullopt otherwise.
std::optional<bool> parse_binary_label(const std::string& reply);

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual std::string invoke(OperatorKind kind, const std::string& instruction,
                             const std::string& input) = 0;
};

struct LadderModel {
  std::string id;
  ModelPrice price;
  std::shared_ptr<ModelBackend> backend;
  std::shared_ptr<std::atomic<std::uint64_t>> calls =
      std::make_shared<std::atomic<std::uint64_t>>(0);
};

/// Ordered model set, weakest/cheapest first, strongest/priciest last.
class ModelLadder {
 public:
  ModelLadder() = default;
  /// Asserts strictly increasing input-token price along the list.
  explicit ModelLadder(std::vector<LadderModel> models);

  std::size_t size() const { return models_.size(); }
  const LadderModel& at(std::size_t i) const { return models_.at(i); }
  const LadderModel& weakest() const { return models_.front(); }
  const LadderModel& strongest() const { return models_.back(); }
  std::size_t index_of(const std::string& model_id) const;

  /// Dispatches to the backend and bumps the model's invocation counter.
  std::string invoke(std::size_t model_index, OperatorKind kind,
                     const std::string& instruction,
                     const std::string& input) const;

  std::uint64_t calls(std::size_t model_index) const;
  std::map<std::string, std::uint64_t> call_counts() const;
  void reset_counters() const;

  PricingTable pricing() const;

 private:
  std::vector<LadderModel> models_;
};

// ---------------------------------------------------------------------------
// Deterministic mock ensemble
// ---------------------------------------------------------------------------

struct MockEnsembleSpec {
  std::vector<double> accuracies{0.5, 0.8, 0.9, 1.0};  // nondecreasing
  double violation_rate = 0.0;  // fraction of items breaking nesting
  std::uint64_t seed = 0;
  std::size_t distractor_pool = 1;  // wrong freeform answers per item
  // Keywords the pattern oracle recognises for unscripted map/filter
  // instructions (e.g. genre names).
  std::vector<std::string> vocabulary;
  std::vector<ModelPrice> prices;  // optional; defaults span ~100x
};

MockEnsembleSpec mock_spec_from_json(const std::string& text);

struct ScriptedItem {
  std::string input;
  std::string answer;
};

/// Shared state behind the mock ladder's backends. Responses are a pure
/// function of (spec, item); correct-answer sets are nested along the
/// ladder except on the violation fraction, where a weaker model is right
/// while a stronger one is wrong.
class MockEnsemble {
 public:
  MockEnsemble(MockEnsembleSpec spec, std::size_t ladder_size);

  /// Registers indexed items with exact per-model correct counts
  /// (llround(accuracy * n) each, nested prefixes of a seeded shuffle).
  void script(std::vector<ScriptedItem> items, TaskKind task);

  std::string respond(std::size_t model_index, OperatorKind kind,
                      const std::string& instruction,
                      const std::string& input) const;

  /// Ground truth for an input: scripted answer when registered, else the
  /// pattern oracle (expression synthesis, vocabulary keywords, hashes).
  std::string truth_for(OperatorKind kind, const std::string& instruction,
                        const std::string& input) const;

  bool scripted_correct(std::size_t model_index, std::size_t item_index) const;
  std::size_t scripted_size() const { return items_.size(); }
  const MockEnsembleSpec& spec() const { return spec_; }

 private:
  std::string wrong_answer(std::size_t model_index, OperatorKind kind,
                           const std::string& truth,
                           const std::string& key) const;
  bool unscripted_correct(std::size_t model_index,
                          const std::string& key) const;

  MockEnsembleSpec spec_;
  std::size_t ladder_size_;
  std::vector<ScriptedItem> items_;
  TaskKind scripted_task_ = TaskKind::Binary;
  std::map<std::string, std::size_t> item_by_input_;
  std::vector<std::vector<bool>> correct_;  // [model][item]
};

struct MockLadder {
  ModelLadder ladder;
  std::shared_ptr<MockEnsemble> ensemble;
};

/// Builds an L-model ladder (ids m1, m2, ..., m*) over a shared mock
/// ensemble. Throws InputError when accuracies decrease along the ladder.
MockLadder build_mock_ladder(const MockEnsembleSpec& spec,
                             std::vector<ScriptedItem> truth = {},
                             TaskKind task = TaskKind::Binary);

/// Stable 64-bit hash used for all mock determinism.
std::uint64_t stable_hash64(std::uint64_t seed, const std::string& text);

}  // namespace semqo
