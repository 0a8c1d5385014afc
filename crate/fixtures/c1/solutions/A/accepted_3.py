import functools, operator, sys
d = list(map(int, sys.stdin.read().split()))
print(functools.reduce(operator.add, d[1:1 + d[0]], 0))
