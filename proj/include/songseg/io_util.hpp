// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace songseg {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);
std::vector<unsigned char> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, const void* data, std::size_t size);

}  // namespace songseg
