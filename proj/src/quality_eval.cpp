#include "toolflow/quality_eval.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "httplib.h"

#include "toolflow/tokenize.hpp"

namespace toolflow {

CorpusStats corpus_stats(const std::vector<Dialogue>& dialogues) {
    CorpusStats stats;
    for (const auto& dialogue : dialogues) {
        for (const auto& msg : dialogue.messages) {
            stats.n_tokens += static_cast<long long>(tokenize(msg.content).size());
            for (const auto& call : msg.tool_calls) {
                stats.n_tokens += static_cast<long long>(tokenize(call.arguments).size());
            }
            if (msg.role == Role::Assistant && !msg.tool_calls.empty()) {
                ++stats.n_call_turns;
                stats.n_calls += static_cast<long long>(msg.tool_calls.size());
            }
        }
    }
    return stats;
}

std::vector<std::string> metric_texts(const std::vector<Dialogue>& dialogues, TextScope scope) {
    std::vector<std::string> texts;
    for (const auto& dialogue : dialogues) {
        for (const auto& msg : dialogue.messages) {
            const bool natural = msg.role == Role::User || msg.role == Role::Assistant;
            if (scope == TextScope::NaturalOnly && !natural) continue;
            if (!msg.content.empty()) texts.push_back(msg.content);
            if (scope == TextScope::Full) {
                for (const auto& call : msg.tool_calls) texts.push_back(call.arguments);
            }
        }
    }
    return texts;
}

double shannon_entropy(const std::vector<Dialogue>& dialogues, TextScope scope) {
    std::unordered_map<std::string, long long> counts;
    long long total = 0;
    for (const auto& text : metric_texts(dialogues, scope)) {
        for (auto& token : tokenize(text)) {
            ++counts[std::move(token)];
            ++total;
        }
    }
    if (total == 0) throw Error("entropy: corpus has no tokens");
    double entropy = 0.0;
    for (const auto& [token, count] : counts) {
        const double f = static_cast<double>(count) / static_cast<double>(total);
        entropy -= f * std::log2(f);
    }
    return entropy;
}

double distinct_n(const std::vector<Dialogue>& dialogues, int n, TextScope scope) {
    if (n < 1) throw Error("distinct_n: n must be >= 1");
    std::unordered_set<std::string> unique;
    long long total = 0;
    for (const auto& text : metric_texts(dialogues, scope)) {
        const auto tokens = tokenize(text);
        if (tokens.size() < static_cast<std::size_t>(n)) continue;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
            unique.insert(join_ngram(tokens, i, static_cast<std::size_t>(n)));
            ++total;
        }
    }
    if (total == 0) {
        throw Error("distinct_n: no message has " + std::to_string(n) + " tokens");
    }
    return static_cast<double>(unique.size()) / static_cast<double>(total);
}

std::vector<TurnPair> extract_turn_pairs(const std::vector<Dialogue>& dialogues) {
    std::vector<TurnPair> pairs;
    for (const auto& dialogue : dialogues) {
        // One turn = a user message plus the assistant prose that answers it.
        std::vector<std::pair<std::string, std::string>> turns;
        for (const auto& msg : dialogue.messages) {
            if (msg.role == Role::User) {
                turns.emplace_back(msg.content, "");
            } else if (msg.role == Role::Assistant && !turns.empty() && !msg.content.empty()) {
                auto& reply = turns.back().second;
                if (!reply.empty()) reply += " ";
                reply += msg.content;
            }
        }
        for (std::size_t t = 0; t + 1 < turns.size(); ++t) {
            TurnPair pair;
            pair.premise = turns[t].first;
            if (!turns[t].second.empty()) pair.premise += " " + turns[t].second;
            pair.hypothesis = turns[t + 1].first;
            if (pair.premise.empty() || pair.hypothesis.empty()) continue;
            pairs.push_back(std::move(pair));
        }
    }
    return pairs;
}

double coherence_ss(const std::vector<Dialogue>& dialogues, EmbeddingProvider& provider) {
    const auto pairs = extract_turn_pairs(dialogues);
    if (pairs.empty()) throw Error("coherence: no turn pairs in corpus");
    std::vector<std::string> texts;
    texts.reserve(pairs.size() * 2);
    for (const auto& pair : pairs) {
        texts.push_back(pair.premise);
        texts.push_back(pair.hypothesis);
    }
    const auto vectors = provider.embed(texts);
    double sum = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        sum += cosine(vectors[2 * i], vectors[2 * i + 1]);
    }
    return 100.0 * sum / static_cast<double>(pairs.size());
}

const char* to_string(NliLabel label) {
    switch (label) {
        case NliLabel::Entailment: return "entailment";
        case NliLabel::Neutral: return "neutral";
        case NliLabel::Contradiction: return "contradiction";
    }
    return "neutral";
}

NliLabel nli_label_from_string(const std::string& name) {
    if (name == "entailment") return NliLabel::Entailment;
    if (name == "neutral") return NliLabel::Neutral;
    if (name == "contradiction") return NliLabel::Contradiction;
    throw Error("unknown NLI label: '" + name + "'");
}

ScriptedNli::ScriptedNli(std::vector<NliLabel> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw Error("scripted NLI needs at least one label");
}

NliResult ScriptedNli::classify(const std::string& premise, const std::string& hypothesis) {
    (void)premise;
    (void)hypothesis;
    NliResult result;
    result.label = labels_[next_ % labels_.size()];
    ++next_;
    result.scores[to_string(result.label)] = 1.0;
    return result;
}

LexicalOverlapNli::LexicalOverlapNli(double entail_threshold, double contradiction_threshold)
    : entail_threshold_(entail_threshold), contradiction_threshold_(contradiction_threshold) {}

NliResult LexicalOverlapNli::classify(const std::string& premise, const std::string& hypothesis) {
    const auto premise_tokens = tokenize(premise);
    const std::set<std::string> premise_vocab(premise_tokens.begin(), premise_tokens.end());
    const auto hyp_tokens = tokenize(hypothesis);
    const std::set<std::string> hyp_vocab(hyp_tokens.begin(), hyp_tokens.end());
    std::size_t shared = 0;
    for (const auto& token : hyp_vocab) {
        if (premise_vocab.count(token)) ++shared;
    }
    const double overlap =
        hyp_vocab.empty() ? 0.0 : static_cast<double>(shared) / static_cast<double>(hyp_vocab.size());
    NliResult result;
    if (overlap >= entail_threshold_) {
        result.label = NliLabel::Entailment;
    } else if (overlap < contradiction_threshold_) {
        result.label = NliLabel::Contradiction;
    } else {
        result.label = NliLabel::Neutral;
    }
    result.scores["overlap"] = overlap;
    return result;
}

RemoteNli::RemoteNli(std::string endpoint_url, std::string api_key, RetryPolicy retry,
                     int timeout_s)
    : url_(std::move(endpoint_url)),
      api_key_(std::move(api_key)),
      retry_(retry),
      timeout_s_(timeout_s) {}

NliResult RemoteNli::classify(const std::string& premise, const std::string& hypothesis) {
    const HttpUrlParts parts = parse_http_url(url_);
    const json body{{"premise", premise}, {"hypothesis", hypothesis}};
    double backoff = retry_.backoff_ms;
    std::string last_error;
    for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
        httplib::Client client(parts.host, parts.port);
        client.set_read_timeout(timeout_s_, 0);
        client.set_connection_timeout(timeout_s_, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        auto res = client.Post(parts.path, headers, body.dump(), "application/json");
        if (res && res->status == 200) {
            try {
                const json doc = json::parse(res->body);
                NliResult result;
                result.label = nli_label_from_string(doc.at("label").get<std::string>());
                if (doc.contains("scores")) {
                    result.scores = doc.at("scores").get<std::map<std::string, double>>();
                }
                return result;
            } catch (const std::exception& e) {
                last_error = e.what();
            }
        } else {
            last_error = res ? "HTTP " + std::to_string(res->status) : "endpoint unreachable";
        }
        if (attempt < retry_.max_retries) {
            std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<int>(backoff)));
            backoff *= retry_.multiplier;
        }
    }
    throw Error("NLI endpoint failed after retries: " + last_error);
}

double coherence_enr(const std::vector<Dialogue>& dialogues, NliClassifier& classifier) {
    const auto pairs = extract_turn_pairs(dialogues);
    if (pairs.empty()) throw Error("coherence: no turn pairs in corpus");
    long long entailed = 0;
    for (const auto& pair : pairs) {
        if (classifier.classify(pair.premise, pair.hypothesis).label == NliLabel::Entailment) {
            ++entailed;
        }
    }
    return 100.0 * static_cast<double>(entailed) / static_cast<double>(pairs.size());
}

const char* const kRubricPromptTemplate =
    "Evaluate the following dialogue between a person and a tool-using AI assistant.\n"
    "Score four dimensions, each an integer from 1 (poor) to 5 (excellent):\n"
    "naturalness (could this exchange plausibly happen), coherence (do turns follow from "
    "each other), helpfulness (does the assistant move the person's goals forward), and "
    "accuracy (are tool calls and answers consistent with the tool results).\n"
    "Explain briefly if you wish, then end your reply with a single line exactly of the "
    "form: NAT=<i> COH=<i> HELP=<i> ACC=<i>\n"
    "DIALOGUE:\n"
    "{dialogue}\n";

std::string render_dialogue_text(const Dialogue& dialogue) {
    std::string out;
    std::map<std::string, std::string> call_names;
    for (const auto& msg : dialogue.messages) {
        switch (msg.role) {
            case Role::System:
                break;
            case Role::User:
                out += "user: " + msg.content + "\n";
                break;
            case Role::Assistant:
                if (!msg.content.empty()) out += "assistant: " + msg.content + "\n";
                for (const auto& call : msg.tool_calls) {
                    call_names[call.id] = call.name;
                    out += "assistant called " + call.name + " with " + call.arguments + "\n";
                }
                break;
            case Role::Tool: {
                auto it = call_names.find(msg.tool_call_id);
                out += "tool " + (it == call_names.end() ? std::string("unknown") : it->second) +
                       ": " + msg.content + "\n";
                break;
            }
        }
    }
    return out;
}

namespace {

std::optional<RubricScores> parse_rubric_reply(const std::string& content) {
    static const std::regex tagged(R"(NAT=(\d+)\s+COH=(\d+)\s+HELP=(\d+)\s+ACC=(\d+))");
    static const std::regex bare(R"(^\s*([1-5])\s+([1-5])\s+([1-5])\s+([1-5])\s*$)");
    std::smatch match;
    std::smatch best;
    auto begin = std::sregex_iterator(content.begin(), content.end(), tagged);
    for (auto it = begin; it != std::sregex_iterator(); ++it) best = *it;  // keep the last
    if (best.empty()) {
        // Tolerate a plain "4 4 4 4" line.
        std::size_t pos = 0;
        std::string last_line;
        while (pos <= content.size()) {
            std::size_t end = content.find('\n', pos);
            if (end == std::string::npos) end = content.size();
            const std::string line = content.substr(pos, end - pos);
            if (std::regex_match(line, match, bare)) last_line = line;
            pos = end + 1;
        }
        if (last_line.empty()) return std::nullopt;
        std::regex_match(last_line, best, bare);
    }
    RubricScores scores;
    scores.naturalness = std::stoi(best[1]);
    scores.coherence = std::stoi(best[2]);
    scores.helpfulness = std::stoi(best[3]);
    scores.accuracy = std::stoi(best[4]);
    for (int v : {scores.naturalness, scores.coherence, scores.helpfulness, scores.accuracy}) {
        if (v < 1 || v > 5) return std::nullopt;
    }
    return scores;
}

}  // namespace

json RubricReport::to_json() const {
    json scored = json::array();
    for (const auto& [id, s] : per_dialogue) {
        scored.push_back(json{{"id", id},
                              {"NAT", s.naturalness},
                              {"COH", s.coherence},
                              {"HELP", s.helpfulness},
                              {"ACC", s.accuracy}});
    }
    return json{{"NAT", nat_mean},       {"COH", coh_mean},   {"HELP", help_mean},
                {"ACC", acc_mean},       {"scored", scored},  {"missing", missing},
                {"sample_ids", sample_ids}};
}

RubricReport rubric_eval(const std::vector<Dialogue>& dialogues, ChatBackend& backend,
                         int sample_size, std::uint64_t seed, const RubricConfig& config) {
    if (sample_size < 1 || sample_size > static_cast<int>(dialogues.size())) {
        throw Error("rubric sample size " + std::to_string(sample_size) +
                    " is outside [1, corpus size " + std::to_string(dialogues.size()) + "]");
    }
    // Seeded partial Fisher-Yates: the first sample_size entries of a
    // shuffled index vector.
    std::vector<std::size_t> indices(dialogues.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    std::mt19937_64 rng(seed);
    for (int k = 0; k < sample_size; ++k) {
        const std::size_t pick =
            static_cast<std::size_t>(k) + uniform_index(rng, indices.size() - static_cast<std::size_t>(k));
        std::swap(indices[static_cast<std::size_t>(k)], indices[pick]);
    }

    const std::string tmpl =
        config.prompt_template.empty() ? kRubricPromptTemplate : config.prompt_template;

    RubricReport report;
    double sums[4] = {0, 0, 0, 0};
    for (int k = 0; k < sample_size; ++k) {
        const Dialogue& dialogue = dialogues[indices[static_cast<std::size_t>(k)]];
        report.sample_ids.push_back(dialogue.id);
        const std::string prompt =
            render_prompt(tmpl, {{"dialogue", render_dialogue_text(dialogue)}});
        GenerationParams params = config.params;
        params.seed = derive_seed(seed, static_cast<std::uint64_t>(k) + 1);

        std::optional<RubricScores> scores;
        for (int attempt = 0; attempt <= config.retries && !scores; ++attempt) {
            const ChatMessage reply = complete_with_retry(
                backend, {ChatMessage{Role::User, prompt}}, params, {}, config.retry_policy);
            scores = parse_rubric_reply(reply.content);
        }
        if (!scores) {
            report.missing.push_back(dialogue.id);
            continue;
        }
        report.per_dialogue.emplace_back(dialogue.id, *scores);
        sums[0] += scores->naturalness;
        sums[1] += scores->coherence;
        sums[2] += scores->helpfulness;
        sums[3] += scores->accuracy;
    }
    const double scored = static_cast<double>(report.per_dialogue.size());
    if (scored > 0) {
        report.nat_mean = sums[0] / scored;
        report.coh_mean = sums[1] / scored;
        report.help_mean = sums[2] / scored;
        report.acc_mean = sums[3] / scored;
    }
    return report;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw Error("pearson: need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error("pearson: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

json MetricsReport::to_json() const {
    json j{{"n_tokens", stats.n_tokens},
           {"n_calls", stats.n_calls},
           {"n_call_turns", stats.n_call_turns},
           {"entropy_H", entropy_bits},
           {"distinct_3", distinct_3},
           {"ss_mean", ss_mean ? json(*ss_mean) : json(nullptr)},
           {"enr_ratio", enr_ratio ? json(*enr_ratio) : json(nullptr)},
           {"rubric", rubric ? rubric->to_json() : json(nullptr)}};
    return j;
}

}  // namespace toolflow
