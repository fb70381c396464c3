#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

namespace prism::test {

// Unique scratch directory, removed on scope exit.
struct TmpDir {
    std::filesystem::path path;

    explicit TmpDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("prism_" + tag + "_" + std::to_string(counter++) + "_" +
                std::to_string(static_cast<unsigned>(::getpid())));
        std::filesystem::create_directories(path);
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace prism::test
