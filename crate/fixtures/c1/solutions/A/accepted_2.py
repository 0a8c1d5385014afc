n = int(input())
a = list(map(int, input().split()))
t = 0
for x in a[:n]:
    t += x
print(t)
