// SPDX-License-Identifier: Apache-2.0
#include "songseg/io_util.hpp"

#include <fstream>
#include <sstream>

#include "songseg/error.hpp"

namespace songseg {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_failure, "cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(Errc::io_failure, "read failed: " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_failure, "cannot open for writing: " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) fail(Errc::io_failure, "write failed: " + path);
}

std::vector<unsigned char> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_failure, "cannot open for reading: " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(Errc::io_failure, "read failed: " + path);
  return buf;
}

void write_binary_file(const std::string& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_failure, "cannot open for writing: " + path);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) fail(Errc::io_failure, "write failed: " + path);
}

}  // namespace songseg
