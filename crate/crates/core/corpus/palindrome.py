def makeSmallestPalindrome(s: str) -> str:
    s = list(s)
    n = len(s)
    for i in range(n):
        c = min(s[i], s[n - 1 - i])
        s[i] = c
        s[n - 1 - i] = c
    return "".join(s)
