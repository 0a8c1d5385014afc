n = int(input())
assert n >= 2
print(1, n - 1)
