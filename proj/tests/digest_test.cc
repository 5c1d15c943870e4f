// Copyright 2026 The provaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "provaudit/digest.h"

#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.h"

namespace provaudit {
namespace {

std::vector<uint8_t> Bytes(std::string_view s) { return {s.begin(), s.end()}; }

TEST(Sha256Test, KnownVectors) {
  EXPECT_EQ(Sha256Hex(std::string_view("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(Sha256Hex(std::string_view("")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Sha256Test, SpanAndStringAgree) {
  const std::string text = "provaudit";
  EXPECT_EQ(Sha256Hex(std::string_view(text)), Sha256Hex(Bytes(text)));
}

TEST(Sha256Test, PrefixIsLittleEndianHead) {
  EXPECT_EQ(Sha256Prefix64("abc"), 0xeacf018fbf1678baULL);
}

TEST(Base64Test, KnownVectors) {
  EXPECT_EQ(Base64Encode(Bytes("")), "");
  EXPECT_EQ(Base64Encode(Bytes("f")), "Zg==");
  EXPECT_EQ(Base64Encode(Bytes("fo")), "Zm8=");
  EXPECT_EQ(Base64Encode(Bytes("foobar")), "Zm9vYmFy");
}

TEST(Base64Test, RoundTripsAllLengths) {
  std::vector<uint8_t> data;
  for (int len = 0; len < 40; ++len) {
    ASSERT_OK_AND_ASSIGN(std::vector<uint8_t> back,
                         Base64Decode(Base64Encode(data)));
    EXPECT_EQ(back, data) << "length " << len;
    data.push_back(static_cast<uint8_t>(len * 37 + 11));
  }
}

TEST(Base64Test, IgnoresLineBreaks) {
  ASSERT_OK_AND_ASSIGN(std::vector<uint8_t> back, Base64Decode("Zm9v\nYmFy\n"));
  EXPECT_EQ(back, Bytes("foobar"));
}

TEST(Base64Test, RejectsMalformedInput) {
  EXPECT_FALSE(Base64Decode("Zm9").ok());
  EXPECT_FALSE(Base64Decode("Zm9v!!!!").ok());
}

}  // namespace
}  // namespace provaudit
