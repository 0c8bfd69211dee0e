#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "cnnaa/auth.hpp"
#include "cnnaa/datapipe.hpp"
#include "cnnaa/image.hpp"
#include "cnnaa/rng.hpp"

using namespace cnnaa;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(CNNAA_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string output;
    std::array<char, 512> buf;
    while (fgets(buf.data(), buf.size(), pipe) != nullptr) output += buf.data();
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), output};
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

/// Miniature dataset: PPM images with a brightness patch whose position
/// encodes the Male label, four landmarks defining two toy parts.
struct ToyData {
    fs::path root;
    std::string manifest;
    std::string part_table;
    std::string videos;

    explicit ToyData(const std::string& name) : root(fs::temp_directory_path() / name) {
        fs::remove_all(root);
        fs::create_directories(root / "img");

        PartTable table;
        table.parts.push_back({"P1", {0, 1}, 17, 17, {"Male", "Smiling"}});
        table.parts.push_back({"P2", {2, 3}, 17, 17, {"Male", "Young"}});
        part_table = (root / "parts.json").string();
        save_part_table(table, part_table);

        Manifest m;
        Rng rng(7);
        for (int i = 0; i < 48; ++i) {
            const int male = i % 2;
            const std::string path = (root / "img" / ("s" + std::to_string(i) + ".ppm")).string();
            Tensor img({40, 40, 3});
            for (float& v : img.data) v = static_cast<float>(rng.uniform(0.2, 0.4));
            // planted signal: bright block top-left for positives, bottom-right otherwise
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    for (int c = 0; c < 3; ++c) {
                        img.at3(male ? y + 6 : y + 26, male ? x + 6 : x + 26, c) = 0.95f;
                    }
            save_ppm(img, path);

            LabeledSample s;
            s.image_ref = path;
            s.labels.assign(40, 0);
            s.labels[attribute_index("Male")] = male;
            s.labels[attribute_index("Smiling")] = (i / 2) % 2;
            s.labels[attribute_index("Young")] = (i / 4) % 2;
            s.landmarks = {{10.0f, 10.0f}, {12.0f, 12.0f}, {28.0f, 28.0f}, {30.0f, 30.0f}};
            s.identity = "id" + std::to_string(i % 4);
            s.split = i < 32 ? Split::kTrain : (i < 40 ? Split::kDev : Split::kTest);
            m.samples.push_back(std::move(s));
        }
        manifest = (root / "manifest.jsonl").string();
        save_manifest(m, manifest);

        // videos reuse the sample images as frames
        videos = (root / "videos.jsonl").string();
        std::ofstream vf(videos);
        for (int id = 0; id < 4; ++id) {
            for (int session = 1; session <= 2; ++session) {
                for (int v = 0; v < 2; ++v) {
                    std::string frames;
                    for (int fidx = 0; fidx < 3; ++fidx) {
                        const int sample = (id + fidx * 4 + (session - 1) * 8 + v * 16) % 48;
                        if (!frames.empty()) frames += ",";
                        frames += "{\"image\":\"" + m.samples[sample].image_ref +
                                  "\",\"landmarks\":[[10,10],[12,12],[28,28],[30,30]]}";
                    }
                    vf << "{\"video\":\"v" << id << "_" << session << "_" << v
                       << "\",\"identity\":\"id" << id << "\",\"session\":\"" << session
                       << "\",\"sensor\":\"phone\",\"enrollment\":" << (v == 0 ? "true" : "false")
                       << ",\"frames\":[" << frames << "]}\n";
                }
            }
        }
    }

    ~ToyData() {
        std::error_code ec;
        fs::remove_all(root, ec);
    }
};

}  // namespace

TEST_CASE("params reproduces the published deep rows in under a second") {
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult r = run_cli("params --family deep");
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("D-Mouth,164448") != std::string::npos);
    CHECK(r.output.find("D-UpperHead,275360") != std::string::npos);
    CHECK(r.output.find("MultiDeep,2420736") != std::string::npos);
    CHECK(elapsed < 1.0);
}

TEST_CASE("budget reproduces the published battery figures") {
    const RunResult idle = run_cli("budget --capacity-wh 8.74 --pn 0.6 --pd 0.78 --alpha 0 --beta 0");
    CHECK(idle.exit_code == 0);
    CHECK(idle.output.find("14.57") != std::string::npos);

    const RunResult worst = run_cli("budget --capacity-wh 8.74 --pn 0.6 --pd 0.78 --alpha 1 --beta 1 --ta 1.22");
    CHECK(worst.exit_code == 0);
    CHECK(worst.output.find("6.33") != std::string::npos);
    CHECK(worst.output.find("1.22 s") != std::string::npos);
}

TEST_CASE("usage errors exit 2, runtime failures exit 1 and clean up") {
    CHECK(run_cli("params --bogus-flag").exit_code == 2);
    CHECK(run_cli("definitely-not-a-command").exit_code == 2);
    const fs::path out = fs::temp_directory_path() / "cnnaa_cli_fail_out";
    fs::remove_all(out);
    const RunResult r = run_cli("train --manifest /nonexistent.jsonl --out " + out.string());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("error:") != std::string::npos);
    // partial outputs (the config snapshot) are removed on failure
    CHECK_FALSE(fs::exists(out / "config_snapshot.json"));
    fs::remove_all(out);
}

TEST_CASE("end-to-end pipeline on a miniature synthetic dataset") {
    const ToyData data("cnnaa_cli_e2e");
    const std::string base = " --part-table " + data.part_table + " --seed 11 ";
    const fs::path out = data.root / "out";

    // train both toy parts
    const RunResult tr = run_cli("--jobs 2" + base + "train --manifest " + data.manifest +
                                 " --out " + (out / "ckpt").string() +
                                 " --part all --batch-size 8 --eval-every 20 --patience 3"
                                 " --max-steps 60");
    INFO(tr.output);
    CHECK(tr.exit_code == 0);
    CHECK(fs::exists(out / "ckpt" / "deep-P1.ckpt"));
    CHECK(fs::exists(out / "ckpt" / "deep-P2.ckpt"));
    CHECK(fs::exists(out / "ckpt" / "deep-P1.report.json"));
    CHECK(fs::exists(out / "ckpt" / "config_snapshot.json"));

    // determinism: re-train one part into a fresh directory
    const RunResult tr2 = run_cli(base + "train --manifest " + data.manifest + " --out " +
                                  (out / "ckpt2").string() +
                                  " --part P1 --batch-size 8 --eval-every 20 --patience 3"
                                  " --max-steps 60");
    INFO(tr2.output);
    CHECK(tr2.exit_code == 0);
    CHECK(read_file((out / "ckpt" / "deep-P1.ckpt").string()) ==
          read_file((out / "ckpt2" / "deep-P1.ckpt").string()));

    // heads + accuracy table
    const RunResult ev = run_cli(base + "eval-attrs --manifest " + data.manifest +
                                 " --checkpoints " + (out / "ckpt").string() + " --fit-heads --out " +
                                 (out / "eval").string());
    INFO(ev.output);
    CHECK(ev.exit_code == 0);
    CHECK(fs::exists(out / "eval" / "heads.json"));
    const std::string acc_csv = read_file((out / "eval" / "accuracy.csv").string());
    CHECK(acc_csv.find("Average,") != std::string::npos);

    // dictionaries
    const RunResult di = run_cli(base + "discover --manifest " + data.manifest + " --checkpoints " +
                                 (out / "ckpt").string() + " --out " + (out / "dict").string() +
                                 " --dict-size 32 --clusters 3 --sparsity 8");
    INFO(di.output);
    CHECK(di.exit_code == 0);
    CHECK(fs::exists(out / "dict" / "deep-P1.dict"));
    CHECK(fs::exists(out / "dict" / "deep-P1.clusters.json"));

    // descriptors in both feature modes
    const RunResult ex1 = run_cli(base + "extract-features --videos " + data.videos +
                                  " --checkpoints " + (out / "ckpt").string() + " --mode attrs" +
                                  " --heads " + (out / "eval" / "heads.json").string() + " --out " +
                                  (out / "attrs.jsonl").string());
    INFO(ex1.output);
    CHECK(ex1.exit_code == 0);
    const RunResult ex2 = run_cli(base + "extract-features --videos " + data.videos +
                                  " --checkpoints " + (out / "ckpt").string() + " --mode discattrs" +
                                  " --dicts " + (out / "dict").string() + " --sparsity 8 --out " +
                                  (out / "disc.jsonl").string());
    INFO(ex2.output);
    CHECK(ex2.exit_code == 0);

    // a discattrs descriptor concatenates one simplex per part
    const auto disc = load_descriptors((out / "disc.jsonl").string());
    REQUIRE(!disc.empty());
    CHECK(disc[0].feature.size() == 6);  // 2 parts x 3 clusters

    // verification protocol on the attribute descriptors
    const RunResult au = run_cli(base + "authenticate --descriptors " + (out / "attrs.jsonl").string() +
                                 " --pairing all --out " + (out / "auth").string());
    INFO(au.output);
    CHECK(au.exit_code == 0);
    CHECK(fs::exists(out / "auth" / "report.json"));
    CHECK(fs::exists(out / "auth" / "roc.svg"));
    const std::string report = read_file((out / "auth" / "report.json").string());
    CHECK(report.find("Altogether") != std::string::npos);
}

TEST_CASE("part-table command writes the default and refits windows") {
    const ToyData data("cnnaa_cli_pt");
    const fs::path out = data.root / "pt.json";
    const RunResult def = run_cli("part-table --out " + out.string());
    CHECK(def.exit_code == 0);
    const PartTable table = load_part_table(out.string());
    CHECK(table.parts.size() == 10);

    const fs::path fitted = data.root / "pt_fit.json";
    const RunResult fit = run_cli("--part-table " + data.part_table + " part-table --fit-windows" +
                                  " --manifest " + data.manifest + " --out " + fitted.string());
    INFO(fit.output);
    CHECK(fit.exit_code == 0);
    const PartTable ft = load_part_table(fitted.string());
    // toy landmarks span 3 pixels per part
    CHECK(ft.parts[0].window_w == 3);
    CHECK(ft.parts[0].window_h == 3);
}
