#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ansfield/scene.hpp"
#include "ansfield/visibility.hpp"

namespace ansfield {

enum class QuestionTemplate { WhereLocated = 0, WhatNextTo = 1, WhatColorOn = 2 };
inline constexpr int kTemplateCount = 3;

/// Which closed vocabulary a question's answers are ranked over.
enum class VocabKind { Locations, Categories, Colors };

std::string to_string(QuestionTemplate t);
QuestionTemplate template_from_string(const std::string& s);
std::string to_string(VocabKind k);
VocabKind vocab_kind_from_string(const std::string& s);

struct Question {
    std::string id;
    QuestionTemplate templ = QuestionTemplate::WhereLocated;
    std::string text;
    /// Target first, then context anchors.
    std::vector<std::string> referenced_ids;
    std::string answer;
    VocabKind vocab_kind = VocabKind::Categories;
    std::vector<std::string> vocab;
    /// Attributes named in the question text (conditioning tokens).
    std::vector<std::string> mentioned_categories;
    std::vector<std::string> mentioned_colors;

    int answer_index() const;
};

/// Answer vocabulary for a kind, derived from the scene vocabulary.
std::vector<std::string> answer_vocab(VocabKind kind, const Vocabulary& vocab);

/// Relational question about one target object; anchors on its nearest neighbour.
Question make_question(const Scene& scene, QuestionTemplate templ, std::size_t target, std::string id,
                       const Vocabulary& vocab = Vocabulary::builtin());

std::vector<Question> generate_questions(const Scene& scene, std::uint64_t seed, int per_scene,
                                         const Vocabulary& vocab = Vocabulary::builtin());

/// Index of the object whose footprint is nearest to objects[target] (ties: lower index).
std::size_t nearest_object(const Scene& scene, std::size_t target);

/// Trapezoidal band-pass on angular size.
struct ViewingBand {
    double theta_lo = 0.10;
    double theta_hi = 0.80;
    double theta_cut = 2.5;

    void validate() const;
    double plateau_mid() const { return 0.5 * (theta_lo + theta_hi); }
};

double viewing_quality(double extent, const ViewingBand& band = {});

double answerability(const Question& q, const std::vector<Observation>& panorama, const ViewingBand& band = {});

struct RankedAnswers {
    /// (answer, confidence), descending confidence, ties by vocabulary index.
    std::vector<std::pair<std::string, double>> entries;

    /// 1-based rank of an answer; 0 when absent.
    int rank_of(const std::string& answer) const;
};

struct RankingOptions {
    ViewingBand band;
    double distractor_scale = 0.5;
    double floor = 0.01;
};

RankedAnswers qa_rank(const Scene& scene, const Question& q, const std::vector<Observation>& panorama,
                      const RankingOptions& options = {});

/// Orders (vocab index, confidence) pairs: confidence descending, then index.
RankedAnswers rank_by_confidence(const std::vector<std::string>& vocab, const std::vector<double>& confidence);

nlohmann::json to_json(const Question& q);
Question question_from_json(const nlohmann::json& j, const Vocabulary& vocab = Vocabulary::builtin());

}  // namespace ansfield
