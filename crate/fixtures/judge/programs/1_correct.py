import sys
d = sys.stdin.read().split()
n = int(d[0])
print(sum(int(x) for x in d[1:1 + n]))
