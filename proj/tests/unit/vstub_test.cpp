#include <gtest/gtest.h>

#include "mev/subprocess.hpp"
#include "test_support.hpp"

namespace mev {
namespace {

namespace fs = std::filesystem;

using namespace std::chrono_literals;

struct SimRun {
  int code;
  std::string out;
};

SimRun sim(const std::string& source, std::chrono::milliseconds timeout = 10s) {
  test::TempDir dir;
  test::write_file(dir / "t.v", source);
  const auto r = run_shell(shell_quote(test::kVstub.string()) + " sim t.v", dir.path(), timeout);
  return {r.timed_out ? -2 : r.exit_code, r.output};
}

std::string tb(const std::string& body) { return "module tb;\n" + body + "\nendmodule\n"; }

TEST(Vstub, ArithmeticAndWidths) {
  const auto r = sim(tb(R"(
  reg [7:0] a, b; reg [3:0] n; reg signed [7:0] s; reg [15:0] wide;
  initial begin
    a = 8'd200; b = 8'd100;
    wide = a + b;          // context width 16 keeps the carry
    n = a + b;             // truncated to 4 bits
    s = -8'sd7;
    $display("%0d %0d %0d %0d", wide, n, s >>> 1, s / 2);
    $display("%b %h %o", 4'b1010, 8'hbe, 6'o17);
    $display("%0d", {a[3:0], b[3:0]});
    $display("%0d %0d", (a > b) ? 1 : 0, &4'b1111);
    $finish;
  end)"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("300 12 -4 -3"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("1010 be 17"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("132"), std::string::npos) << r.out;  // 0x84
  EXPECT_NE(r.out.find("1 1"), std::string::npos) << r.out;
}

TEST(Vstub, NonblockingSwapAndClockedCounter) {
  const auto r = sim(R"(
module counter #(parameter W = 4) (input clk, input rst, output reg [W-1:0] q);
  always @(posedge clk) if (rst) q <= 0; else q <= q + 1;
endmodule
module tb;
  reg clk = 0, rst = 1;
  reg [3:0] x = 1, y = 2;
  wire [3:0] q;
  counter #(.W(4)) dut(.clk(clk), .rst(rst), .q(q));
  always #5 clk = ~clk;
  initial begin
    @(posedge clk); x <= y; y <= x;
    #1 $display("swap %0d %0d", x, y);
    rst = 0;
    repeat (20) @(posedge clk);
    #1 $display("q=%0d t=%0t", q, $time);
    $finish;
  end
endmodule
)");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("swap 2 1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("q=4 t=206"), std::string::npos) << r.out;  // wrapped past 15
}

TEST(Vstub, CaseFunctionsAndMemories) {
  const auto r = sim(tb(R"(
  reg [7:0] mem [0:3]; integer i; reg [1:0] sel; reg [7:0] y;
  function [7:0] twice(input [7:0] v); twice = v << 1; endfunction
  always @* case (sel) 2'd0: y = 8'd10; 2'd1: y = 8'd20; default: y = 8'd99; endcase
  initial begin
    for (i = 0; i < 4; i = i + 1) mem[i] = twice(i);
    sel = 1; #1 $display("y=%0d m3=%0d", y, mem[3]);
    sel = 3; #1 $display("y=%0d", y);
    $finish;
  end)"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("y=20 m3=6"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("y=99"), std::string::npos) << r.out;
}

TEST(Vstub, ErrorsAndExitCodes) {
  auto r = sim("module a(input x);\n  assign y = x;\n");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("t.v:"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("error"), std::string::npos) << r.out;

  r = sim(tb("initial $fatal(1, \"boom\");"));
  EXPECT_EQ(r.code, 1) << r.out;

  r = sim(tb("initial begin $display(\"%m\"); $finish; end"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("tb"), std::string::npos);

  r = sim(tb("reg c = 0; always #1 c = ~c;"), 1500ms);
  EXPECT_EQ(r.code, -2) << "runaway simulation should be killed";
}

TEST(Vstub, CompileThenRunBundle) {
  test::TempDir dir;
  test::write_file(dir / "d.v", "module d(output y); assign y = 1'b1; endmodule\n");
  test::write_file(dir / "t.v", "module tb; wire y; d u(.y(y)); initial begin #1 $display(\"y=%b\", y); $finish; end endmodule\n");
  const std::string vstub = shell_quote(test::kVstub.string());
  auto r = run_shell(vstub + " compile -o out.bundle d.v t.v", dir.path(), 10s);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  ASSERT_TRUE(fs::exists(dir / "out.bundle"));
  r = run_shell(vstub + " run out.bundle", dir.path(), 10s);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("y=1"), std::string::npos) << r.output;
  r = run_shell(vstub + " bogus", dir.path(), 10s);
  EXPECT_EQ(r.exit_code, 64);
}

TEST(Vstub, MiniSuiteReferencesPass) {
  for (const auto& entry : fs::directory_iterator(test::kDataDir / "mini_suite")) {
    if (!entry.is_directory()) continue;
    test::TempDir dir;
    const auto r = run_shell(shell_quote(test::kVstub.string()) + " sim " + shell_quote((entry.path() / "ref.v").string()) +
                                 " " + shell_quote((entry.path() / "tb.v").string()),
                             dir.path(), 20s);
    EXPECT_EQ(r.exit_code, 0) << entry.path() << r.output;
    EXPECT_NE(r.output.find("ALL_TESTS_PASSED"), std::string::npos) << entry.path() << r.output;
  }
}

}  // namespace
}  // namespace mev
