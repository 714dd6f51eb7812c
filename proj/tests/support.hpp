// SPDX-License-Identifier: Apache-2.0
//
// momet: moment-matching estimation of narrow diffuse sources
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "momet/types.hpp"

namespace testing_support {

// Code of the momet::Error thrown by f, or nothing.
template <class F>
std::optional<momet::ErrorCode> error_code(F&& f)
{
    try {
        f();
    } catch (const momet::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

template <class F>
std::string error_message(F&& f)
{
    try {
        f();
    } catch (const momet::Error& e) {
        return e.what();
    }
    return {};
}

// Fresh directory under the system temporary directory.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("momet_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing_support
