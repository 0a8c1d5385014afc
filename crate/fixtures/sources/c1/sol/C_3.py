n = int(input())
a = 2 if n >= 4 else 1
print(a, n - a)
