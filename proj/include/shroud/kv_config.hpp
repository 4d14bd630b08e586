/*
 * Copyright 2026 The Shroud Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace shroud {

// "key = value" lines; '#' starts a comment. Later keys override earlier.
using KvConfig = std::map<std::string, std::string>;

KvConfig parse_kv(const std::string& text);
KvConfig read_kv_file(const std::filesystem::path& path);

// config-error naming the first key not in `known`.
void require_known_keys(const KvConfig& cfg, const std::set<std::string>& known);

std::vector<std::string> split_list(const std::string& text, char sep = ',');

}  // namespace shroud
