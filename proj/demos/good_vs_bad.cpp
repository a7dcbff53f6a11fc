// Generates a good and a bad drive from the demo settings and scores the bad
// one against the good one.
//   good_vs_bad [data_dir]

#include <iostream>

#include "lka/cli.hpp"

int main(int argc, char** argv) {
    namespace fs = std::filesystem;
    const fs::path data = argc > 1 ? fs::path(argv[1]) : fs::path(LKA_DEMO_DATA);
    try {
        auto run = [&](const char* name) {
            const auto setting = lka::synthetic_setting_from_json(lka::read_json_file(data / name));
            const auto frames = lka::resample(lka::generate_drive(setting));
            const auto filtered = lka::filter_frames(frames, lka::default_filter_policy(frames));
            std::cout << setting.meta.setting_id << ": " << filtered.valid_count() << "/" << filtered.frame_count()
                      << " valid frames\n";
            return lka::analyze_drive(filtered);
        };
        const auto good = run("good_setting.json");
        const auto bad = run("bad_setting.json");
        const auto rep = lka::compare_settings(good, bad);
        std::cout << '\n' << lka::cli::format_score_table(rep);
        for (const auto& [cell, lv] : rep.levene)
            std::cout << "levene " << lka::code(cell.first) << ' ' << lka::to_string(cell.second) << ": W=" << lv.W
                      << " p=" << lv.p_value << '\n';
    } catch (const lka::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    }
    return 0;
}
