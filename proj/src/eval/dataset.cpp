#include <algorithm>
#include <filesystem>
#include <fstream>

#include "ismp/eval/eval.hpp"
#include "ismp/geometry/cloud_io.hpp"

namespace fs = std::filesystem;

namespace ismp {

namespace {

std::vector<fs::path> cloud_files(const fs::path& dir, const std::string& what) {
    if (!fs::is_directory(dir))
        throw Error("eval", "LayoutError", what + " directory missing: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".xyz" || ext == ".ply") files.push_back(entry.path());
    }
    if (files.empty())
        throw Error("eval", "LayoutError", what + " directory has no .xyz/.ply files: " +
                                               dir.string());
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<int> load_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("eval", "LayoutError", "cannot open labels: " + path.string());
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        // Strip a possible trailing CR from files written on other platforms.
        if (line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line != "0" && line != "1")
            throw Error("eval", "LabelLengthMismatch",
                        path.string() + ":" + std::to_string(line_no) +
                            ": expected 0 or 1, got '" + line + "'");
        labels.push_back(line == "1" ? 1 : 0);
    }
    return labels;
}

bool stem_says_normal(const std::string& stem) {
    return stem.find("good") != std::string::npos || stem.find("normal") != std::string::npos;
}

}  // namespace

Dataset load_dataset(const std::string& root, Warnings* warnings) {
    const fs::path base(root);
    if (!fs::is_directory(base))
        throw Error("eval", "LayoutError", "dataset root is not a directory: " + root);

    Dataset ds;
    fs::path name = base.filename();
    if (name.empty()) name = base.parent_path().filename();
    ds.category = name.string();

    for (const fs::path& file : cloud_files(base / "train", "train")) {
        ds.train.push_back(
            LabeledSample{load_cloud(file.string()), {}, false, file.stem().string()});
    }

    const fs::path gt_dir = base / "gt";
    for (const fs::path& file : cloud_files(base / "test", "test")) {
        LabeledSample sample{load_cloud(file.string()), {}, false, file.stem().string()};
        const fs::path gt = gt_dir / (file.stem().string() + ".txt");
        if (fs::is_regular_file(gt)) {
            sample.point_labels = load_labels(gt);
            if (sample.point_labels.size() != sample.cloud.size())
                throw Error("eval", "LabelLengthMismatch",
                            gt.string() + ": " + std::to_string(sample.point_labels.size()) +
                                " labels for " + std::to_string(sample.cloud.size()) + " points");
            sample.object_anomalous = std::any_of(sample.point_labels.begin(),
                                                  sample.point_labels.end(),
                                                  [](int l) { return l == 1; });
        } else {
            sample.object_anomalous = !stem_says_normal(sample.sample_id);
            warn(warnings, "eval: no ground truth for " + file.filename().string() +
                               ", object label inferred from filename");
        }
        ds.test.push_back(std::move(sample));
    }
    return ds;
}

}  // namespace ismp
