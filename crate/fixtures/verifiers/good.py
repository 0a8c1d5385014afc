import sys
n = int(open(sys.argv[1]).read().split()[0])
out = open(sys.argv[2]).read().split()
if len(out) != 2:
    sys.exit("expected two integers")
try:
    a, b = int(out[0]), int(out[1])
except ValueError:
    sys.exit("not integers")
if not (1 <= a <= b and a + b == n):
    sys.exit("pair does not split n")
