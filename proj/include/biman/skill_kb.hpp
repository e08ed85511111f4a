#pragma once

#include "biman/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace biman
{

/// One hand's part of a template step. `slot` names a PointTemplate; it is
/// absent exactly when the primitive is idle.
struct TemplateAction
{
  HandPrimitive primitive = HandPrimitive::Idle;
  std::optional<std::string> slot;
};

struct TemplateStep
{
  TemplateAction right;
  TemplateAction left;

  const TemplateAction& hand(Hand h) const { return h == Hand::Right ? right : left; }
};

inline constexpr std::string_view kWildcard = "*";

struct PointTemplate
{
  std::string slot;
  std::string object_category{kWildcard};
  TagSet required_affordances;
  TagSet required_attributes;
  TagSet required_state;
};

enum class HandRequirement
{
  Free,
  Holding,
  Any
};

struct HandPrecondition
{
  HandRequirement right = HandRequirement::Any;
  HandRequirement left = HandRequirement::Any;
  bool reversible = false;

  HandRequirement hand(Hand h) const { return h == Hand::Right ? right : left; }
};

struct SkillEntry
{
  std::string name;
  Coordination coordination = Coordination::Unimanual;
  std::vector<TemplateStep> tuple_template;
  std::vector<PointTemplate> point_preconditions;
  HandPrecondition hand_preconditions;

  const PointTemplate* slot(std::string_view name) const;
  /// Hand that the template assigns to `slot` (first use wins).
  std::optional<Hand> slot_hand(std::string_view slot) const;
  /// Largest number of non-idle hands in any step.
  int max_active_hands() const;
};

/// Sparse token weights, L2-normalised (or empty for text without tokens).
struct EmbeddingVector
{
  std::map<std::string, double> weights;

  double dot(const EmbeddingVector& other) const;
  double norm() const;
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

std::vector<std::string> tokenize(std::string_view text);

struct ScoredSkill
{
  const SkillEntry* entry = nullptr;
  double similarity = 0.0;
};

/// Skill library with a TF-IDF embedding fitted on the skill names.
class KnowledgeBase
{
public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(std::vector<SkillEntry> entries);

  const std::vector<SkillEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  const SkillEntry* find(std::string_view name) const;
  const EmbeddingVector& name_embedding(size_t index) const { return name_embeddings_[index]; }

  double idf(const std::string& token) const;
  EmbeddingVector embed(std::string_view text) const;

private:
  std::vector<SkillEntry> entries_;
  std::vector<EmbeddingVector> name_embeddings_;
  std::map<std::string, double> idf_;
  double unseen_idf_ = 1.0;
};

void validate_entry(const SkillEntry& entry);

KnowledgeBase load_kb(const std::filesystem::path& file);
KnowledgeBase parse_kb(std::string_view json_text);

EmbeddingVector embed_text(std::string_view text, const KnowledgeBase& kb);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Ranked by similarity descending, ties by ascending name.
std::vector<ScoredSkill> retrieve_top_k(std::string_view query, int k, const KnowledgeBase& kb);
/// Single-threaded reference for tests and benchmarks.
std::vector<ScoredSkill> retrieve_top_k_serial(std::string_view query, int k, const KnowledgeBase& kb);

}  // namespace biman
