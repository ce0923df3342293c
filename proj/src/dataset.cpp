#include "relmap/dataset.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "relmap/image_io.hpp"

namespace relmap {

LabeledDataset load_dataset(const std::filesystem::path& image_dir,
                            const std::filesystem::path& labels_csv,
                            const std::string& attribute) {
    std::ifstream f(labels_csv);
    if (!f) throw std::runtime_error("cannot open labels CSV " + labels_csv.string());

    LabeledDataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line.back() == '\r') {
            if (!line.empty()) line.pop_back();
            if (line.empty()) continue;
        }
        std::istringstream ls(line);
        std::string filename, attr, score_text;
        if (!std::getline(ls, filename, ',') || !std::getline(ls, attr, ',') ||
            !std::getline(ls, score_text)) {
            throw std::runtime_error(labels_csv.string() + ":" + std::to_string(line_no) +
                                     ": expected filename,attribute,raw_score");
        }
        double raw;
        try {
            raw = std::stod(score_text);
        } catch (const std::logic_error&) {
            if (line_no == 1) continue;  // header row
            throw std::runtime_error(labels_csv.string() + ":" + std::to_string(line_no) +
                                     ": raw_score \"" + score_text + "\" is not a number");
        }
        if (!attribute.empty() && attr != attribute) continue;
        if (!(raw >= 1.0 && raw <= 9.0)) {
            throw std::runtime_error(labels_csv.string() + ":" + std::to_string(line_no) +
                                     ": raw_score " + score_text + " outside [1, 9]");
        }
        const Image8 img = read_image(image_dir / filename);
        ds.items.push_back({hwc_to_chw(image_to_hwc(img)), raw});
    }
    if (ds.empty()) {
        throw std::runtime_error("no usable rows in " + labels_csv.string() +
                                 (attribute.empty() ? "" : " for attribute \"" + attribute + "\""));
    }
    return ds;
}

}  // namespace relmap
