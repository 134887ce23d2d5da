// Writes the built-in template set to a directory in the on-disk layout that
// TemplateSet::load_dir consumes. Keeps the shipped assets byte-identical to
// the compiled-in versions.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "tropeval/prompting.hpp"

namespace fs = std::filesystem;
using namespace tropeval;

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: " << argv[0] << " <output-dir>\n";
        return 1;
    }
    fs::path root(argv[1]);
    fs::create_directories(root / "exemplars");

    TemplateSet ts = TemplateSet::builtin();
    auto write = [](const fs::path& p, const std::string& content) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) {
            std::cerr << "cannot write " << p << "\n";
            std::exit(1);
        }
        out << content << "\n";
    };
    write(root / "VERSION", ts.version());
    write(root / "trope_wise_base.txt", ts.trope_wise_base());
    write(root / "trope_wise_cot.txt", ts.trope_wise_cot());
    write(root / "multi_label_base.txt", ts.multi_label_base());
    write(root / "multi_label_with_definitions.txt", ts.multi_label_with_definitions());

    for (const auto& id : ts.exemplar_ids()) {
        const Exemplar& e = ts.exemplar(id);
        nlohmann::ordered_json j;
        j["id"] = e.id;
        j["query_trope"] = e.query_trope;
        j["plot_sentences"] = e.plot_sentences;
        j["answer_json"] = e.answer_json;
        write(root / "exemplars" / (id + ".json"), j.dump(2));
    }
    std::cout << "templates written to " << root << "\n";
    return 0;
}
