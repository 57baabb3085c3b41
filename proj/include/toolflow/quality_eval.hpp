#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "toolflow/embedding.hpp"
#include "toolflow/llm_client.hpp"
#include "toolflow/synthesizer.hpp"

namespace toolflow {

struct CorpusStats {
    long long n_tokens = 0;      // all message contents plus tool-call argument text
    long long n_calls = 0;       // individual tool calls
    long long n_call_turns = 0;  // assistant messages carrying at least one call
};

CorpusStats corpus_stats(const std::vector<Dialogue>& dialogues);

// Which text feeds the diversity/coherence metrics. NaturalOnly keeps user
// and assistant prose and drops tool payloads and call arguments, which would
// otherwise dominate the token distribution.
enum class TextScope { NaturalOnly, Full };

std::vector<std::string> metric_texts(const std::vector<Dialogue>& dialogues, TextScope scope);

// Entropy in bits of the corpus word-frequency distribution. Throws on a
// token-free corpus.
double shannon_entropy(const std::vector<Dialogue>& dialogues,
                       TextScope scope = TextScope::NaturalOnly);

// Unique n-grams over total n-grams; windows never cross message boundaries.
// Throws when no message has n tokens.
double distinct_n(const std::vector<Dialogue>& dialogues, int n = 3,
                  TextScope scope = TextScope::NaturalOnly);

struct TurnPair {
    std::string premise;     // user request + assistant response of turn t
    std::string hypothesis;  // user request of turn t+1
};

std::vector<TurnPair> extract_turn_pairs(const std::vector<Dialogue>& dialogues);

// Mean turn-pair embedding cosine, as a percentage.
double coherence_ss(const std::vector<Dialogue>& dialogues, EmbeddingProvider& provider);

enum class NliLabel { Entailment, Neutral, Contradiction };

const char* to_string(NliLabel label);
NliLabel nli_label_from_string(const std::string& name);

struct NliResult {
    NliLabel label = NliLabel::Neutral;
    std::map<std::string, double> scores;
};

class NliClassifier {
public:
    virtual ~NliClassifier() = default;
    virtual NliResult classify(const std::string& premise, const std::string& hypothesis) = 0;
    virtual std::string id() const = 0;
};

// Replays a fixed label sequence, cycling when exhausted.
class ScriptedNli : public NliClassifier {
public:
    explicit ScriptedNli(std::vector<NliLabel> labels);
    NliResult classify(const std::string& premise, const std::string& hypothesis) override;
    std::string id() const override { return "scripted-nli"; }

private:
    std::vector<NliLabel> labels_;
    std::size_t next_ = 0;
};

// Deterministic offline stand-in: entailment when enough of the hypothesis
// vocabulary already appears in the premise.
class LexicalOverlapNli : public NliClassifier {
public:
    explicit LexicalOverlapNli(double entail_threshold = 0.35,
                               double contradiction_threshold = 0.05);
    NliResult classify(const std::string& premise, const std::string& hypothesis) override;
    std::string id() const override { return "mock-nli-overlap"; }

private:
    double entail_threshold_;
    double contradiction_threshold_;
};

// POST {premise, hypothesis} -> {label, scores}.
class RemoteNli : public NliClassifier {
public:
    RemoteNli(std::string endpoint_url, std::string api_key = "", RetryPolicy retry = {},
              int timeout_s = 120);
    NliResult classify(const std::string& premise, const std::string& hypothesis) override;
    std::string id() const override { return url_; }

private:
    std::string url_;
    std::string api_key_;
    RetryPolicy retry_;
    int timeout_s_;
};

// Percentage of turn pairs labeled entailment.
double coherence_enr(const std::vector<Dialogue>& dialogues, NliClassifier& classifier);

struct RubricScores {
    int naturalness = 0;
    int coherence = 0;
    int helpfulness = 0;
    int accuracy = 0;
};

struct RubricReport {
    double nat_mean = 0.0;
    double coh_mean = 0.0;
    double help_mean = 0.0;
    double acc_mean = 0.0;
    std::vector<std::pair<std::string, RubricScores>> per_dialogue;  // scored, in sample order
    std::vector<std::string> missing;  // ids whose judge replies never parsed
    std::vector<std::string> sample_ids;

    json to_json() const;
};

struct RubricConfig {
    int retries = 2;
    std::string prompt_template;  // empty selects the built-in template
    GenerationParams params;
    RetryPolicy retry_policy;
};

// Scores a seeded uniform sample of dialogues on the four 1-5 dimensions.
// The judge must end its reply with "NAT=<i> COH=<i> HELP=<i> ACC=<i>".
RubricReport rubric_eval(const std::vector<Dialogue>& dialogues, ChatBackend& backend,
                         int sample_size, std::uint64_t seed, const RubricConfig& config = {});

// Sample Pearson correlation; throws on length mismatch, n < 2, or zero
// variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct MetricsReport {
    CorpusStats stats;
    double entropy_bits = 0.0;
    double distinct_3 = 0.0;
    std::optional<double> ss_mean;
    std::optional<double> enr_ratio;
    std::optional<RubricReport> rubric;

    json to_json() const;
};

extern const char* const kRubricPromptTemplate;

// Plain-text rendering of a dialogue for judge prompts.
std::string render_dialogue_text(const Dialogue& dialogue);

}  // namespace toolflow
