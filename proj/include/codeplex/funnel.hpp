#pragma once

// Hard-question funnel: script -> question candidates -> program -> score -> threshold.

#include "codeplex/ast.hpp"
#include "codeplex/model.hpp"
#include "codeplex/subtree.hpp"

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace codeplex {

/// One question as returned by a text-generation client, before option shuffling.
struct GeneratedQuestion {
    std::string question;
    std::string answer;
    std::array<std::string, 4> distractors;
};

class GenerationClient {
public:
    virtual ~GenerationClient() = default;
    virtual std::string id() const = 0;
    /// Throws Error(ClientError) on transport or format failures.
    virtual std::vector<GeneratedQuestion> generate_questions(const std::string& script, const std::string& prompt) = 0;
    /// Returns program source. Throws Error(ClientError).
    virtual std::string generate_program(const std::string& question, const std::vector<std::string>& options,
                                         const std::string& prompt) = 0;
};

/// Deterministic client. Answers come from a fixture when one matches
/// (keyed by script digest / question text), otherwise they are synthesized
/// from digests of the inputs, so the same inputs always give the same output.
///
/// Fixture JSON: {"questions": {"<script digest>": [{"q","ans","dist1".."dist4"}]},
///                "programs": {"<question text>": "<source>"}}
class StubClient final : public GenerationClient {
public:
    explicit StubClient(std::size_t questions_per_script = 3);
    static std::unique_ptr<StubClient> from_fixture(const std::string& json_text, std::size_t questions_per_script = 3);

    std::string id() const override { return "stub"; }
    std::vector<GeneratedQuestion> generate_questions(const std::string& script, const std::string& prompt) override;
    std::string generate_program(const std::string& question, const std::vector<std::string>& options,
                                 const std::string& prompt) override;

private:
    std::size_t per_script_;
    std::map<std::string, std::vector<GeneratedQuestion>> questions_;
    std::map<std::string, std::string> programs_;
};

struct HttpClientConfig {
    std::string endpoint;  // http(s)://host[:port]/path; POST {"prompt": ...} -> {"text": ...}
    std::string auth_token;
    double timeout_seconds = 60.0;
    int retries = 2;
    std::string model;  // forwarded as "model" when non-empty
};

class HttpClient final : public GenerationClient {
public:
    explicit HttpClient(HttpClientConfig config);
    std::string id() const override;
    std::vector<GeneratedQuestion> generate_questions(const std::string& script, const std::string& prompt) override;
    std::string generate_program(const std::string& question, const std::vector<std::string>& options,
                                 const std::string& prompt) override;

private:
    std::string complete(const std::string& prompt);
    HttpClientConfig config_;
};

/// Parses a completion holding a JSON array (or {"questions": [...]}) of
/// {"q","ans","dist1".."dist4"} objects. Code fences are tolerated.
std::vector<GeneratedQuestion> parse_question_completion(const std::string& text);
/// Extracts program text from a completion, dropping Markdown code fences.
std::string extract_program(const std::string& text);

std::string question_prompt(const std::string& script, std::size_t count);
std::string program_prompt(const std::string& question, const std::vector<std::string>& options);

enum class CandidateStatus { Candidate, Selected, FilteredOut, ManuallyRejected };
const char* status_name(CandidateStatus s) noexcept;
CandidateStatus status_from_name(const std::string& name);

struct Provenance {
    std::string question_client;
    std::string program_client;
    std::string script_hash;
    std::string question_prompt_hash;
    std::string program_prompt_hash;
    std::string program_hash;
    std::string catalog_fingerprint;
};

struct CandidateQuestion {
    std::string candidate_id;
    std::string video_id;
    std::size_t ordinal = 0;  // position among the video's generated questions
    std::string question;
    std::array<std::string, 5> options;
    int correct_index = 0;
    std::string program;
    std::optional<double> score;
    CandidateStatus status = CandidateStatus::Candidate;
    std::string reason;  // set for every non-selected candidate
    Provenance provenance;
};

/// delta >= threshold admits; the top-fraction rule calibrates delta first.
struct SelectionRule {
    enum class Mode { None, Delta, TopFraction } mode = Mode::None;
    double delta = 0.0;
    double fraction = 0.1;
    std::vector<double> reference;
};

/// Smallest delta such that ceil(fraction * N) reference scores are >= delta.
/// Equal scores at delta are all admitted.
double calibrate_threshold(std::vector<double> reference, double fraction);

/// Resolves the rule to a concrete delta (nullopt for Mode::None).
std::optional<double> resolve_threshold(const SelectionRule& rule);

struct ScriptInput {
    std::string video_id;
    std::string script;
};

struct FunnelOptions {
    ParseOptions parse;
    SelectionRule rule;
    std::size_t questions_per_script = 3;
};

struct FunnelReport {
    std::size_t videos = 0;
    std::size_t candidates = 0;
    std::size_t reused = 0;     // candidates taken from an existing store
    std::size_t generated = 0;  // client calls made for programs in this run
    std::size_t scored = 0;
    std::size_t selected = 0;
    std::size_t filtered_out = 0;
    std::size_t manually_rejected = 0;
    std::optional<double> delta;
    std::vector<std::string> video_errors;  // question generation failures, "video_id: message"
    std::map<std::string, std::size_t> reasons;
};

std::string candidate_to_json(const CandidateQuestion& c);
CandidateQuestion candidate_from_json(const std::string& line);

std::vector<CandidateQuestion> read_store(const std::string& path);
/// Writes all candidates (one JSON object per line) via a temporary file and rename.
void write_store(const std::string& path, const std::vector<CandidateQuestion>& store);

/// Runs the funnel, reusing whatever the store at `store_path` already holds
/// for the same scripts, and rewrites the store in a canonical order.
FunnelReport run_funnel(const std::vector<ScriptInput>& scripts, GenerationClient& question_client,
                        GenerationClient& program_client, const ComplexityModel& model, const SubtreeCatalog& catalog,
                        const FunnelOptions& options, const std::string& store_path);

/// Re-applies a selection rule to scored candidates. Manually rejected
/// candidates stay rejected.
FunnelReport apply_selection(std::vector<CandidateQuestion>& store, const SelectionRule& rule);

/// Moves selected candidates to manually-rejected. `decisions` maps
/// candidate_id to a reason. Unknown ids throw Error(UnknownItem); ids that
/// are not currently selected throw Error(InvalidArgument).
std::size_t apply_review(std::vector<CandidateQuestion>& store, const std::map<std::string, std::string>& decisions);

FunnelReport summarize(const std::vector<CandidateQuestion>& store);

}  // namespace codeplex
