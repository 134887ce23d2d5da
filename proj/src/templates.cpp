// Built-in prompt template assets. The wording (including the 'otherise' typo
// in the detector instruction) is pinned on purpose; edits require a new
// version id, since cache keys and run fingerprints incorporate it.

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tropeval/prompting.hpp"
#include "tropeval/text.hpp"

namespace tropeval {

namespace {

constexpr const char* kVersion = "appendix-v1";

constexpr const char* kTropeWiseBase =
    "You are a trope detector, given a trope, answer 'yes' if the trope is relevant to the "
    "article, 'no' otherise. Provide a brief explanation for your answer.\n"
    "Article: {article}.\n"
    "Is the trope {trope} related to the article?";

constexpr const char* kTropeWiseCot =
    "You are a trope detector, tasked with identifying the presence or absence of a specific "
    "trope in an article. You will be provided with an article and a trope to detect.\n"
    "Your task is to generate a JSON object with the following keys:\n"
    "Trope Definition: a brief explanation of the trope\n"
    "Thought: a list of reasoning steps, each containing Reasoning (why the trope is depicted "
    "in the plot), Evidence (the supporting text), and Relevant Paragraphs (numerical "
    "identifiers of sentences where evidence is found)\n"
    "Answer: \"yes\" or \"no\"\n"
    "Here is an example provided:\n"
    "{exemplar}\n"
    "Article: {article}.Is the trope {trope} related to the article?";

constexpr const char* kMultiLabelBase =
    "You are a trope tagger, your role is to select a set of trope to categorize the content "
    "from the provided TropeList:{trope_list}\n"
    "{exemplar}Article: {article}.\n"
    "Strictly select only the tropes related to the article from the TropeList mentioned "
    "above, and feel free to pick multiple tropes if they are relevant";

constexpr const char* kMultiLabelWithDefinitions =
    "You are a trope tagger, your role is to select a set of tropes to categorize the content "
    "from the provided TropeList: {trope_list}.\n"
    "Trope refers to common themes, motifs, or clichés that appear repeatedly in any "
    "forms of storytelling. Tropes can be narrative devices, character types, plot points, or "
    "stylistic elements that are recognizable and often evoke certain expectations or "
    "reactions from the audience.\n"
    "And the definition of each trope is as follows:\n"
    "{trope_definitions}\n"
    "{exemplar}Article: {article}.\n"
    "Strictly select only the tropes related to the article from the TropeList mentioned "
    "above, and feel free to pick multiple tropes if they are relevant.";

Exemplar make_example1() {
    Exemplar e;
    e.id = "example1";
    e.query_trope = "Downer Ending";
    e.plot_sentences = {
        "Joe is an impoverished New York newsboy who lives with his abusive grandmother.",
        "While selling papers, he is given a ticket for a children's excursion sponsored by the "
        "Fresh Air Fund.",
        "The next morning, Joe sneaks out of his tenement home to join the excursion, where he "
        "sees the countryside and the ocean for the first time.",
        "After a picnic, an adult volunteer reads the children a story about a young prince who "
        "is beaten by an old witch.",
        "A group of fairies rescue the boy, take him to a boat, and sail off for \"the Land "
        "Beyond the Sunset, where he lived happily ever after.\"",
        "Joe imagines himself as the boy in the story.",
        "When the group returns to the city, Joe stays behind because he is afraid of his "
        "grandmother.",
        "He wanders to the beach, where he finds a rowboat and decides to go to the Land Beyond "
        "the Sunset himself.",
        "He pushes the boat into the water and climbs in.",
        "The film ends with a long shot of Joe drifting out to sea.",
    };
    e.answer_json =
        "{\n"
        "    \"Trope\": \"Downer Ending\",\n"
        "    \"Definition\": \"A conclusion to a narrative that is emotionally bleak, tragic, "
        "or pessimistic, leaving the audience with a sense of sorrow or dissatisfaction.\",\n"
        "    \"Thought\": [\n"
        "        {\n"
        "            \"Reasoning\": \"The ending depicts the boy casting himself drift in the "
        "open ocean, facing certain death without provisions, evoking profound sadness.\",\n"
        "            \"Evidence\": \"In paragraph 9, the film ends with a long shot of Joe "
        "drifting out to sea, with nothing to eat or drink, suggesting a bleak and tragic fate "
        "for the character.\",\n"
        "            \"Relevant Paragraphs\": 9\n"
        "        }\n"
        "    ],\n"
        "    \"Answer\": \"yes\"\n"
        "}";
    return e;
}

Exemplar make_example2() {
    Exemplar e;
    e.id = "example2";
    e.query_trope = "Asshole Victim";
    e.plot_sentences = {
        "New York City 16th Precinct Police Detective Dixon (Dana Andrews), who has been "
        "demoted by his superiors for his heavy-handed tactics, subjects murder suspect and "
        "gambler Ken Paine (Craig Stevens) to the third degree.",
        "He strikes the drunken Paine in self-defense and accidentally kills him.",
        "Paine, however, had a silver plate in his head, a fine war record, and newspaper "
        "friends.",
        "Dixon then dumps Paine's body in the river, and is later assigned to find his killer.",
        "Dixon tries to place the blame on an old gangster enemy, Tommy Scalise (Gary Merrill), "
        "but inadvertently puts cab driver Jiggs Taylor (Tom Tully) under suspicion instead.",
        "Having fallen in love with Jiggs' daughter and Paine's estranged wife, Morgan "
        "Taylor-Paine (Gene Tierney), Dixon tries to clear the cabbie without implicating "
        "himself, but ultimately becomes tangled in a web of his own creation.",
        "The 16th Precinct commander and Dixon's boss, newly promoted Detective Lt. Thomas "
        "(Karl Malden), are convinced that Morgan's father is the killer.",
        "Dixon continues to find a way to stop Jiggs from being found guilty of murdering "
        "Paine, and also tries to redeem himself.",
        "In an attempt to move the evidence away from Morgan's father and blame Scalise, Dixon "
        "comes face to face with the gangster and his cronies.",
        "A shoot-out leaves Dixon wounded, but the police arrive to arrest Scalise and his mob.",
        "Jiggs is finally cleared of the charges.",
        "At the end Dixon reassesses his life and decides to confess.",
        "He is satisfied that Morgan believes in him regardless of the outcome.",
    };
    e.answer_json =
        "{\n"
        "    \"Trope\": \"Asshole Victim\",\n"
        "    \"Definition\": \"When the victim is a bad guy.\",\n"
        "    \"Thought\": [\n"
        "        {\n"
        "            \"Reasoning\": \"In paragraph 0, Ken has some unfavorable "
        "characteristics.\",\n"
        "            \"Evidence\": \"Ken, who is characterized as a murder suspect and a "
        "gambler.\",\n"
        "            \"Relevant Paragraphs\": 0\n"
        "        },\n"
        "        {\n"
        "            \"Reasoning\": \"From paragraph 1, I know a character Ken was killed.\",\n"
        "            \"Evidence\": \"Ken is killed by Dixon during the confrontation, fitting "
        "the trope where a character with negative traits ends up being a victim.\",\n"
        "            \"Relevant Paragraphs\": 1\n"
        "        }\n"
        "    ],\n"
        "    \"Answer\": \"yes\"\n"
        "}";
    return e;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ValidationError("cannot open template asset: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string Exemplar::render() const {
    std::ostringstream out;
    out << "# segment article into sentence\n";
    for (size_t i = 0; i < plot_sentences.size(); ++i) {
        out << i << ", " << plot_sentences[i] << "\n";
    }
    out << "Query: Is the trope \"" << query_trope << "\" in the article? Answer:\n";
    out << answer_json;
    return out.str();
}

TemplateSet TemplateSet::builtin() {
    TemplateSet ts;
    ts.version_ = kVersion;
    ts.trope_wise_base_ = kTropeWiseBase;
    ts.trope_wise_cot_ = kTropeWiseCot;
    ts.multi_label_base_ = kMultiLabelBase;
    ts.multi_label_defs_ = kMultiLabelWithDefinitions;
    Exemplar e1 = make_example1();
    Exemplar e2 = make_example2();
    ts.exemplars_.emplace(e1.id, std::move(e1));
    ts.exemplars_.emplace(e2.id, std::move(e2));
    return ts;
}

TemplateSet TemplateSet::load_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::path root(dir);
    TemplateSet ts;
    ts.version_ = text::trim(read_file(root / "VERSION"));
    ts.trope_wise_base_ = text::trim(read_file(root / "trope_wise_base.txt"));
    ts.trope_wise_cot_ = text::trim(read_file(root / "trope_wise_cot.txt"));
    ts.multi_label_base_ = text::trim(read_file(root / "multi_label_base.txt"));
    ts.multi_label_defs_ = text::trim(read_file(root / "multi_label_with_definitions.txt"));

    fs::path exdir = root / "exemplars";
    if (!fs::is_directory(exdir)) throw ValidationError("template dir lacks exemplars/: " + dir);
    for (const auto& entry : fs::directory_iterator(exdir)) {
        if (entry.path().extension() != ".json") continue;
        nlohmann::json j = nlohmann::json::parse(read_file(entry.path()));
        Exemplar e;
        e.id = j.at("id").get<std::string>();
        for (const auto& s : j.at("plot_sentences")) e.plot_sentences.push_back(s.get<std::string>());
        e.query_trope = j.at("query_trope").get<std::string>();
        e.answer_json = j.at("answer_json").get<std::string>();
        ts.exemplars_.emplace(e.id, std::move(e));
    }
    if (ts.exemplars_.empty()) throw ValidationError("template dir has no exemplars: " + dir);
    return ts;
}

const Exemplar& TemplateSet::exemplar(const std::string& id) const {
    auto it = exemplars_.find(id);
    if (it == exemplars_.end()) throw ValidationError("unknown exemplar id: " + id);
    return it->second;
}

std::vector<std::string> TemplateSet::exemplar_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : exemplars_) out.push_back(id);
    return out;
}

}  // namespace tropeval
